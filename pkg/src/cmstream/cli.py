"""Command-line surface: simulate, compare, verify, oracle, gen-traces.

Exit codes: 0 success, 2 config error, 3 trace error, 4 oracle size guard.
Every run writes its full effective config next to its outputs so it can be
reproduced exactly. CMSTREAM_VERBOSE=1 enables progress chatter.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional

import yaml

from . import config as cfgmod
from .config import ConfigError
from .engine import SimConfig, run_comparison, run_simulation
from .model import UserState
from .momd import (
    InstanceTooLargeError,
    brute_force_momd_optimum,
    check_sufficient_conditions,
    resolve_from_marginal_scores,
)
from .somd import ScoreFunction, brute_force_somd_optimum
from .strategy import brute_force_bitrate_rows, optimal_bitrate_matrix
from .traceio import (
    EncounterTrace,
    TraceParseError,
    TraceUnderrunError,
    emit_capacity_trace,
    emit_encounter_trace,
    emit_results,
    generate_synthetic_traces,
    parse_capacity_trace,
    parse_encounter_trace,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TRACE = 3
EXIT_SIZE_GUARD = 4

VERBOSE = os.environ.get("CMSTREAM_VERBOSE", "") not in ("", "0")


def _note(msg: str) -> None:
    if VERBOSE:
        print(msg, file=sys.stderr)


def _fail(code: int, kind: str, message: str) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def _load_config(path: str) -> SimConfig:
    data = _load_yaml(path)
    # emitted snapshots carry bookkeeping keys on top of the plain config
    for key in ("traces_dir", "compare"):
        data.pop(key, None)
    return cfgmod.sim_config_from_dict(data)


def _load_yaml(path: str) -> dict:
    with open(path) as f:
        data = yaml.safe_load(f)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping")
    return data


def _write_snapshot(out_dir: Path, cfg: SimConfig, extra: Dict) -> None:
    snapshot = cfgmod.sim_config_to_dict(cfg)
    snapshot.update(extra)
    (out_dir / "config_snapshot.yaml").write_text(
        yaml.safe_dump(snapshot, sort_keys=True))


def _read_traces(traces_dir: str):
    d = Path(traces_dir)
    capacity = parse_capacity_trace((d / "capacity.csv").read_text())
    enc_path = d / "encounter.csv"
    if enc_path.exists():
        encounters = parse_encounter_trace(enc_path.read_text())
    else:
        encounters = EncounterTrace()
    return capacity, encounters


def cmd_simulate(args) -> int:
    try:
        cfg = _load_config(args.config)
        if args.mechanism:
            cfg = replace(cfg, mechanism=args.mechanism)
        if args.K is not None:
            cfg = replace(cfg, K=args.K)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
    except FileNotFoundError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    except (ConfigError, ValueError) as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    try:
        capacity, encounters = _read_traces(args.traces)
    except FileNotFoundError as exc:
        return _fail(EXIT_TRACE, "trace", str(exc))
    except TraceParseError as exc:
        return _fail(EXIT_TRACE, "trace", str(exc))
    try:
        _note(f"simulating {cfg.mechanism} K={cfg.K}")
        result = run_simulation(cfg, capacity, encounters)
    except TraceUnderrunError as exc:
        return _fail(EXIT_TRACE, "trace", str(exc))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    emit_results(result, args.format, out_dir, include_events=args.events)
    _write_snapshot(out_dir, cfg, {"traces_dir": str(args.traces)})
    print(f"social_welfare={result.social_welfare:.6g} "
          f"rebuffer_ratio={result.rebuffer_ratio:.6g} "
          f"degradation_ratio={result.degradation_ratio:.6g} "
          f"auctions={result.auction_count}")
    return EXIT_OK


def cmd_compare(args) -> int:
    try:
        raw = _load_yaml(args.config)
        cfg = cfgmod.sim_config_from_dict(
            {k: v for k, v in raw.items() if k in
             cfgmod._TOP_KEYS - {"trace_stats", "trace"}})
        stats = cfgmod.trace_stats_from_dict(raw.get("trace_stats") or {})
        trace_opts = raw.get("trace") or {}
        if not stats:
            return _fail(EXIT_CONFIG, "config",
                         "compare needs a trace_stats section")
    except FileNotFoundError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    except (ConfigError, ValueError) as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))

    horizon = float(trace_opts.get("horizon_s",
                                   cfg.video_length_s * 12 + 400.0))
    step = float(trace_opts.get("step_s", 5.0))
    mechanisms = args.mechanisms.split(",")
    ks = [int(x) for x in args.k_values.split(",")]
    overheads = [float(x) for x in args.overheads.split(",")]

    cells = []
    for mech in mechanisms:
        for k in ks:
            if mech in ("somd", "vickrey_1d") and k != 1:
                continue
            for oh in overheads:
                label = f"mechanism={mech},K={k},overhead={oh:g}"
                cells.append((label, replace(
                    cfg, mechanism=mech,
                    K=1 if mech in ("somd", "vickrey_1d", "noncooperative")
                    else k,
                    overhead_energy_per_auction=oh)))

    def gen(seed: int):
        return (generate_synthetic_traces(stats, horizon, step, seed),
                EncounterTrace())

    try:
        table = run_comparison(cells, gen, args.replications,
                               base_seed=cfg.seed)
    except TraceUnderrunError as exc:
        return _fail(EXIT_TRACE, "trace", str(exc))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    emit_results(table, args.format, out_dir)
    _write_snapshot(out_dir, cfg, {
        "trace_stats": {u: {"mean": m, "std": s}
                        for u, (m, s) in stats.items()},
        "trace": {"horizon_s": horizon, "step_s": step},
        "compare": {"mechanisms": mechanisms, "k_values": ks,
                    "overheads": overheads,
                    "replications": args.replications},
    })
    for row in table.rows:
        print(f"{row['cell']}: social_welfare={row['social_welfare']:.6g} "
              f"rebuffer_ratio={row['rebuffer_ratio']:.6g}")
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        cfg = _load_config(args.config)
    except FileNotFoundError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    except (ConfigError, ValueError) as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    failures = 0
    for downloader in cfg.users:
        for bidder in cfg.users:
            report = check_sufficient_conditions(downloader, bidder, cfg.K)
            status = "pass" if report.all_ok else "FAIL"
            detail = ""
            if not report.nonnegative_ok:
                r, gain, cost = report.nonnegative_violations[0]
                detail += (f" quality-vs-cost fails at rate {r:g} "
                           f"(gain {gain:.4g} < cost {cost:.4g});")
            if not report.nonincreasing_ok:
                detail += (f" concavity margin fails "
                           f"({report.nonincreasing_lhs:.4g} > "
                           f"{report.delta_bound:.4g})")
            print(f"downloader={downloader.user_id} bidder={bidder.user_id}: "
                  f"{status}{detail}")
            failures += 0 if report.all_ok else 1
    pairs = len(cfg.users) ** 2
    print(f"summary: {pairs - failures}/{pairs} pairs satisfy the "
          f"marginal-score conditions")
    return EXIT_OK


def _instance_bidders(data: dict):
    bidders = []
    for entry in data.get("bidders", []):
        profile = cfgmod.user_from_dict(entry["profile"])
        st = entry.get("state") or {}
        state = UserState(buffer_s=float(st.get("buffer_s", 0.0)),
                          prev_bitrate=float(st.get("prev_bitrate", 0.0)))
        bidders.append((profile, state))
    return bidders


def cmd_oracle(args) -> int:
    try:
        data = _load_yaml(args.instance)
    except FileNotFoundError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    except (ConfigError, ValueError) as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    try:
        if args.kind == "momd" and "marginal_scores" in data:
            outcome = resolve_from_marginal_scores(
                {str(k): [float(x) for x in v]
                 for k, v in data["marginal_scores"].items()},
                int(data["K"]))
            alloc = outcome.revised_allocation
            print(f"allocation: {json.dumps(alloc, sort_keys=True)}")
            for uid in sorted(alloc):
                if alloc[uid]:
                    print(f"score_damage_payment[{uid}] = "
                          f"{outcome.payments[uid]:.6g}")
            return EXIT_OK

        downloader = cfgmod.user_from_dict(data["downloader"])
        bidders = _instance_bidders(data)
        if args.kind == "somd":
            uid, rate, welf = brute_force_somd_optimum(bidders, downloader)
            print(f"optimum: bidder={uid} bitrate={rate:g} "
                  f"welfare={welf:.6g}")
        elif args.kind == "momd":
            K = int(data.get("K", 1))
            alloc, vectors, welf = brute_force_momd_optimum(
                bidders, downloader, K)
            print(f"optimum: allocation={list(alloc)} welfare={welf:.6g}")
            for uid, vec in sorted(vectors.items()):
                if vec:
                    print(f"bitrates[{uid}] = {list(vec)}")
        else:  # matrix
            profile, state = _instance_bidders(data)[0]
            K = int(data.get("K", 1))
            sf = ScoreFunction.efficient(downloader)
            rows = brute_force_bitrate_rows(profile, state, sf, K)
            fast = optimal_bitrate_matrix(profile, state, sf, K)
            print(f"brute-force rows: {[list(r) for r in rows]}")
            print(f"reduced-solver rows: "
                  f"{[list(r[:k + 1]) for k, r in enumerate(fast)]}")
            welf = None
        if args.kind in ("somd", "momd") and "mechanism_welfare" in data:
            claimed = float(data["mechanism_welfare"])
            verdict = "EQUAL" if abs(claimed - welf) <= 1e-9 else "DIFFERENT"
            print(f"mechanism welfare {claimed:.6g} vs oracle "
                  f"{welf:.6g}: {verdict}")
        return EXIT_OK
    except InstanceTooLargeError as exc:
        return _fail(EXIT_SIZE_GUARD, "size-guard", str(exc))
    except (KeyError, ConfigError, ValueError) as exc:
        return _fail(EXIT_CONFIG, "config", f"bad instance: {exc!r}")


def cmd_gen_traces(args) -> int:
    try:
        raw = _load_yaml(args.config)
        stats = cfgmod.trace_stats_from_dict(raw.get("trace_stats") or {})
        if not stats:
            return _fail(EXIT_CONFIG, "config",
                         "gen-traces needs a trace_stats section")
        trace_opts = raw.get("trace") or {}
        horizon = float(trace_opts.get("horizon_s", 1600.0))
        step = float(trace_opts.get("step_s", 5.0))
        seed = args.seed if args.seed is not None else int(raw.get("seed", 0))
    except FileNotFoundError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    except (ConfigError, ValueError) as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    trace = generate_synthetic_traces(stats, horizon, step, seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "capacity.csv").write_text(emit_capacity_trace(trace))
    (out_dir / "encounter.csv").write_text(
        emit_encounter_trace(EncounterTrace()))
    print(f"wrote traces for {len(trace.users)} users to {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cmstream",
        description="Auction-based cooperative video streaming simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one simulation against traces")
    p.add_argument("--config", required=True)
    p.add_argument("--traces", required=True)
    p.add_argument("--mechanism", choices=("somd", "momd", "vickrey_1d",
                                           "noncooperative"))
    p.add_argument("--K", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json-lines"), default="csv")
    p.add_argument("--events", action="store_true",
                   help="also write the event log")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="mechanism/K/overhead comparison grid")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--replications", type=int, default=50)
    p.add_argument("--mechanisms", default="momd,noncooperative")
    p.add_argument("--k-values", default="1")
    p.add_argument("--overheads", default="0")
    p.add_argument("--format", choices=("csv", "json-lines"), default="csv")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify",
                       help="check marginal-score sufficient conditions")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="brute-force optimum for an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--kind", choices=("somd", "momd", "matrix"),
                   required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen-traces", help="write synthetic trace files")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_gen_traces)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
