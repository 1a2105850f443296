"""End-to-end tests for the cmstream command line."""

import json

import pytest
import yaml

from cmstream.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_SIZE_GUARD,
    EXIT_TRACE,
    main,
)

SIM_CONFIG = {
    "users": [
        {"user_id": "A", "cost_per_mbit": 0.25, "link_cost_per_s": 0.45},
        {"user_id": "B", "cost_per_mbit": 0.25, "link_cost_per_s": 0.45},
    ],
    "K": 1,
    "mechanism": "momd",
    "video_length_s": 50.0,
    "trace_stats": {"A": {"mean": 3.0, "std": 0.3},
                    "B": {"mean": 3.0, "std": 0.3}},
    "trace": {"horizon_s": 800.0, "step_s": 5.0},
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(SIM_CONFIG))
    return path


@pytest.fixture
def traces_dir(tmp_path, config_path):
    out = tmp_path / "traces"
    code = main(["gen-traces", "--config", str(config_path),
                 "--out", str(out), "--seed", "3"])
    assert code == EXIT_OK
    return out


def test_gen_traces_writes_files(traces_dir):
    assert (traces_dir / "capacity.csv").exists()
    assert (traces_dir / "encounter.csv").exists()
    header = (traces_dir / "capacity.csv").read_text().splitlines()[0]
    assert header == "time_s,user_id,capacity_mbps"


def test_gen_traces_needs_stats(tmp_path):
    path = tmp_path / "bare.yaml"
    path.write_text(yaml.safe_dump({"users": [{"user_id": "A"}]}))
    assert main(["gen-traces", "--config", str(path),
                 "--out", str(tmp_path / "t")]) == EXIT_CONFIG


def test_simulate_writes_outputs(tmp_path, config_path, traces_dir, capsys):
    out = tmp_path / "run"
    code = main(["simulate", "--config", str(config_path),
                 "--traces", str(traces_dir), "--out", str(out),
                 "--events"])
    assert code == EXIT_OK
    for name in ("metrics.csv", "summary.csv", "events.csv",
                 "config_snapshot.yaml"):
        assert (out / name).exists()
    assert "social_welfare=" in capsys.readouterr().out


def test_simulate_snapshot_reproduces(tmp_path, config_path, traces_dir):
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    assert main(["simulate", "--config", str(config_path),
                 "--traces", str(traces_dir), "--out", str(out1)]) == EXIT_OK
    # rerun from the emitted snapshot: outputs must match byte for byte
    assert main(["simulate", "--config", str(out1 / "config_snapshot.yaml"),
                 "--traces", str(traces_dir), "--out", str(out2)]) == EXIT_OK
    for name in ("metrics.csv", "summary.csv"):
        assert (out1 / name).read_text() == (out2 / name).read_text()


def test_simulate_bad_config(tmp_path, traces_dir):
    bad = tmp_path / "bad.yaml"
    bad.write_text(yaml.safe_dump({"users": [{"user_id": "A"}],
                                   "mechanism": "dutch"}))
    code = main(["simulate", "--config", str(bad),
                 "--traces", str(traces_dir), "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG


def test_simulate_missing_traces(tmp_path, config_path):
    code = main(["simulate", "--config", str(config_path),
                 "--traces", str(tmp_path / "nowhere"),
                 "--out", str(tmp_path / "o")])
    assert code == EXIT_TRACE


def test_simulate_malformed_trace(tmp_path, config_path, capsys):
    d = tmp_path / "traces"
    d.mkdir()
    (d / "capacity.csv").write_text("wrong,header,line\n0,A,1\n")
    code = main(["simulate", "--config", str(config_path),
                 "--traces", str(d), "--out", str(tmp_path / "o")])
    assert code == EXIT_TRACE
    err = capsys.readouterr().err
    assert json.loads(err.splitlines()[-1])["error"] == "trace"


def test_compare_grid(tmp_path, config_path, capsys):
    out = tmp_path / "cmp"
    code = main(["compare", "--config", str(config_path),
                 "--out", str(out), "--replications", "2",
                 "--mechanisms", "momd,noncooperative"])
    assert code == EXIT_OK
    assert (out / "comparison.csv").exists()
    assert (out / "config_snapshot.yaml").exists()
    lines = (out / "comparison.csv").read_text().splitlines()
    assert lines[0].startswith("cell,social_welfare")
    assert len(lines) == 3  # header + two cells
    assert "mechanism=momd" in capsys.readouterr().out


def test_verify_reports_pairs(config_path, capsys):
    assert main(["verify", "--config", str(config_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "summary:" in out
    assert "downloader=A bidder=B" in out


def test_oracle_marginal_scores(tmp_path, capsys):
    inst = tmp_path / "ex.yaml"
    inst.write_text(yaml.safe_dump({
        "K": 4,
        "marginal_scores": {"1": [8, 7, 5, 2], "2": [9, 6, 3, 2],
                            "3": [4, 4, 3, 1]},
    }))
    assert main(["oracle", "--instance", str(inst),
                 "--kind", "momd"]) == EXIT_OK
    out = capsys.readouterr().out
    assert '"1": 2' in out and '"2": 2' in out and '"3": 0' in out
    assert "score_damage_payment[1] = 8" in out
    assert "score_damage_payment[2] = 9" in out


def test_oracle_somd_equality(tmp_path, capsys):
    from cmstream.model import UserState
    from cmstream.config import user_from_dict
    from cmstream.somd import brute_force_somd_optimum

    downloader = {"user_id": "d", "cost_per_mbit": 0.2}
    bidders = [{"profile": {"user_id": "u1", "theta": 1.2}},
               {"profile": {"user_id": "u2", "theta": 0.4}}]
    _, _, w = brute_force_somd_optimum(
        [(user_from_dict(b["profile"]), UserState()) for b in bidders],
        user_from_dict(downloader))
    inst = tmp_path / "somd.yaml"
    inst.write_text(yaml.safe_dump({
        "downloader": downloader,
        "bidders": bidders,
        "mechanism_welfare": float(w),
    }))
    assert main(["oracle", "--instance", str(inst),
                 "--kind", "somd"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "optimum: bidder=" in out
    assert "EQUAL" in out


def test_oracle_size_guard(tmp_path):
    inst = tmp_path / "big.yaml"
    inst.write_text(yaml.safe_dump({
        "K": 2,
        "downloader": {"user_id": "d"},
        "bidders": [{"profile": {"user_id": f"u{i}"}} for i in range(5)],
    }))
    assert main(["oracle", "--instance", str(inst),
                 "--kind", "momd"]) == EXIT_SIZE_GUARD


def test_oracle_matrix_kind(tmp_path, capsys):
    inst = tmp_path / "m.yaml"
    inst.write_text(yaml.safe_dump({
        "K": 2,
        "downloader": {"user_id": "d", "cost_per_mbit": 0.45},
        "bidders": [{"profile": {"user_id": "u"},
                     "state": {"prev_bitrate": 2.3}}],
    }))
    assert main(["oracle", "--instance", str(inst),
                 "--kind", "matrix"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "brute-force rows:" in out
    assert "reduced-solver rows:" in out
