"""Deterministic trace-driven simulator for cooperative segment downloading.

Each user auctions his cellular link's next K segment-download slots whenever
the link is free; bids, allocations and payments come from the auction
modules, downloads run against the capacity trace, and buffers drain in real
time. A single run is strictly sequential and reproducible: identical
(config, traces, seed) give an identical event log.
"""

from __future__ import annotations

import heapq
import json
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .model import UserProfile, UserState, utility_total
from .momd import resolve_vickrey_score
from .somd import (
    InsufficientBiddersError,
    ScoreFunction,
    SomdBid,
    SomdOutcome,
    optimal_somd_bid,
    resolve_second_score,
    score,
)
from .strategy import (
    AdaptationPolicy,
    ParticipationConfig,
    baseline_bitrate,
    build_momd_bid,
    should_participate,
)
from .traceio import (
    CapacityTrace,
    EncounterTrace,
    TraceUnderrunError,
    degradation_ratio,
)

MECHANISMS = ("somd", "momd", "vickrey_1d", "noncooperative")

CAPACITY_WINDOW = 3  # completed downloads feeding the capacity estimate


@dataclass(frozen=True)
class SimConfig:
    users: Tuple[UserProfile, ...]
    K: int = 1
    mechanism: str = "momd"
    adaptation: AdaptationPolicy = AdaptationPolicy("optimal")
    participation: ParticipationConfig = ParticipationConfig()
    participation_enabled: bool = False
    video_length_s: float = 100.0
    overhead_energy_per_auction: float = 0.0
    overhead_time_per_auction_s: float = 0.0
    d2d_delay_s: float = 0.0
    seed: int = 0
    idle_retry_s: float = 1.0

    def __post_init__(self):
        if not self.users:
            raise ValueError("need at least one user")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"unknown mechanism {self.mechanism!r}")
        if self.mechanism in ("somd", "vickrey_1d") and self.K != 1:
            raise ValueError(f"{self.mechanism} requires K=1")
        ids = [u.user_id for u in self.users]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate user ids")
        for u in self.users:
            beta = u.ladder.segment_length_s
            n = self.video_length_s / beta
            if abs(n - round(n)) > 1e-9:
                raise ValueError(
                    f"video_length_s must be a multiple of user {u.user_id}'s "
                    f"segment length")


@dataclass(frozen=True)
class SimEvent:
    time_s: float
    kind: str
    payload: Dict[str, object]

    def as_row(self) -> Dict[str, object]:
        return {"time_s": self.time_s, "kind": self.kind,
                "payload": json.dumps(self.payload, sort_keys=True)}


@dataclass
class UserResult:
    user_id: str
    welfare: float
    utility: float
    cost: float
    payments_made: float
    payments_received: float
    overhead_energy: float
    average_bitrate_mbps: float
    rebuffer_s: float
    rebuffer_ratio: float
    degradation_volume_mbps: float
    degradation_ratio: float


@dataclass
class SimResult:
    per_user: Dict[str, UserResult]
    social_welfare: float
    rebuffer_ratio: float
    degradation_ratio: float
    auction_count: int
    assumption1_violations: int
    events: Tuple[SimEvent, ...]

    def per_user_rows(self) -> List[Dict[str, object]]:
        rows = []
        for uid in self.per_user:
            r = self.per_user[uid]
            rows.append({
                "user_id": uid,
                "welfare": r.welfare,
                "payments_made": r.payments_made,
                "payments_received": r.payments_received,
                "average_bitrate_mbps": r.average_bitrate_mbps,
                "rebuffer_s": r.rebuffer_s,
                "rebuffer_ratio": r.rebuffer_ratio,
                "degradation_volume_mbps": r.degradation_volume_mbps,
                "degradation_ratio": r.degradation_ratio,
            })
        return rows

    def aggregate_row(self) -> Dict[str, object]:
        return {
            "social_welfare": self.social_welfare,
            "rebuffer_ratio": self.rebuffer_ratio,
            "degradation_ratio": self.degradation_ratio,
            "auction_count": self.auction_count,
            "assumption1_violations": self.assumption1_violations,
        }


def download_duration(trace: CapacityTrace, user: str, start_s: float,
                      bitrate: float, beta_s: float) -> float:
    """Seconds to move one segment (bitrate * beta megabits) over the user's
    piecewise-constant link starting at start_s; zero for a zero bitrate."""
    if bitrate == 0:
        return 0.0
    return trace.finish_time(user, start_s, bitrate * beta_s) - start_s


@dataclass(frozen=True)
class PriceBid:
    bidder_id: str
    price: float
    bitrate: float


def single_dimensional_vickrey_baseline(bids: Sequence[PriceBid]) -> SomdOutcome:
    """Plain Vickrey on prices: highest price wins the single segment at his
    policy-fixed bitrate and pays the second price."""
    if len(bids) < 2:
        raise InsufficientBiddersError("insufficient bidders: need at least 2")
    ranked = sorted(bids, key=lambda b: (-b.price, b.bidder_id))
    second = max(b.price for b in ranked[1:])
    return SomdOutcome(winner_id=ranked[0].bidder_id,
                       winning_bitrate=ranked[0].bitrate,
                       payment=second)


class _UserSim:
    """Mutable per-user simulation state."""

    def __init__(self, profile: UserProfile, total_segments: int,
                 initial_capacity: float):
        self.profile = profile
        self.total_segments = total_segments
        self.buffer_s = 0.0
        self.prev_bitrate = 0.0
        self.played_s = 0.0
        self.stall_s = 0.0
        self.stalling = False
        self.started = False
        self.completed = total_segments == 0
        self.last_update = 0.0
        self.next_seq = 0        # segments assigned so far
        self.pending = 0         # assigned but not yet delivered
        self.received: List[Tuple[int, float]] = []
        self.capacity_window = deque([initial_capacity], maxlen=CAPACITY_WINDOW)
        self.utility = 0.0
        self.cost = 0.0
        self.payments_made = 0.0
        self.payments_received = 0.0
        self.auctions_initiated = 0

    @property
    def remaining_to_assign(self) -> int:
        return self.total_segments - self.next_seq

    def capacity_estimate(self) -> float:
        return sum(self.capacity_window) / len(self.capacity_window)

    def headroom_segments(self, beta: float, max_buffer: float) -> int:
        return math.floor((max_buffer - self.buffer_s) / beta + 1e-9) - self.pending

    def state(self) -> UserState:
        return UserState(buffer_s=self.buffer_s,
                         prev_bitrate=self.prev_bitrate,
                         capacity_history=tuple(self.capacity_window))


class _Simulation:
    def __init__(self, cfg: SimConfig, capacity: CapacityTrace,
                 encounters: EncounterTrace):
        self.cfg = cfg
        self.capacity = capacity
        self.encounters = encounters
        self.events: List[SimEvent] = []
        self.queue: List[Tuple[float, int, str, tuple]] = []
        self._seq = 0
        self.auction_count = 0
        self.assumption1_violations = 0
        self.users: Dict[str, _UserSim] = {}
        for profile in cfg.users:
            beta = profile.ladder.segment_length_s
            total = round(cfg.video_length_s / beta)
            self.users[profile.user_id] = _UserSim(
                profile, total, capacity.capacity_at(profile.user_id, 0.0))
        self.horizon_guard = cfg.video_length_s * 100 + 1000.0

    # -- event plumbing ----------------------------------------------------

    def _push(self, t: float, kind: str, data: tuple) -> None:
        self._seq += 1
        heapq.heappush(self.queue, (t, self._seq, kind, data))

    def _log(self, t: float, kind: str, **payload) -> None:
        self.events.append(SimEvent(time_s=t, kind=kind, payload=payload))

    # -- playback/buffer dynamics -----------------------------------------

    def _advance(self, uid: str, t: float) -> None:
        u = self.users[uid]
        if t < u.last_update:
            raise AssertionError("time went backwards")
        if not u.started or u.completed:
            u.last_update = t
            return
        elapsed = t - u.last_update
        if u.stalling:
            u.stall_s += elapsed
            u.last_update = t
            return
        remaining_play = self.cfg.video_length_s - u.played_s
        drain = min(elapsed, u.buffer_s, remaining_play)
        u.played_s += drain
        u.buffer_s -= drain
        moment = u.last_update + drain
        if remaining_play - drain <= 1e-12:
            u.completed = True
            self._log(moment, "video_complete", user=uid)
        elif u.buffer_s <= 1e-12 and elapsed - drain > 1e-12:
            u.buffer_s = 0.0
            u.stalling = True
            self._log(moment, "playback_stall_start", user=uid)
            u.stall_s += t - moment
        u.last_update = t

    def _deliver(self, t: float, uid: str, bitrate: float, seq_no: int,
                 downloader: str) -> None:
        self._advance(uid, t)
        u = self.users[uid]
        beta = u.profile.ladder.segment_length_s
        u.buffer_s += beta
        u.prev_bitrate = bitrate
        u.pending -= 1
        u.received.append((seq_no, bitrate))
        u.started = True
        if u.stalling:
            u.stalling = False
            self._log(t, "playback_stall_end", user=uid)
        self._log(t, "segment_delivered", user=uid, downloader=downloader,
                  bitrate=bitrate, seq=seq_no)

    # -- auctions ----------------------------------------------------------

    def _neighbor_shares(self, uid: str, t: float) -> List[float]:
        """Capacity each encountered user would allot to uid under an even
        split across his own neighborhood."""
        ids = list(self.users)
        shares = []
        for i in ids:
            if not self.encounters.connected(uid, i, t):
                continue
            n_i = sum(1 for j in ids if self.encounters.connected(i, j, t))
            shares.append(self.capacity.capacity_at(i, t) / n_i)
        return shares

    def _candidate_bidders(self, auctioneer: str, t: float) -> List[str]:
        cfg = self.cfg
        h_n = self.capacity.capacity_at(auctioneer, t)
        out = []
        for uid, u in self.users.items():
            if cfg.mechanism == "noncooperative" and uid != auctioneer:
                continue
            if not self.encounters.connected(auctioneer, uid, t):
                continue
            if u.remaining_to_assign <= 0:
                continue
            self._advance(uid, t)
            beta = u.profile.ladder.segment_length_s
            if u.headroom_segments(beta, u.profile.ladder.max_buffer_s) <= 0:
                continue
            if (cfg.participation_enabled
                    and cfg.mechanism != "noncooperative"
                    and not should_participate(
                        u.profile, u.state(), h_n,
                        self._neighbor_shares(uid, t),
                        cfg.participation)):
                continue
            out.append(uid)
        return out

    def _ready(self, t: float, auctioneer: str) -> None:
        if t > self.horizon_guard:
            raise RuntimeError(
                f"simulation horizon exceeded at t={t:.1f}; likely a trace "
                f"underrun or permanently refused auctions")
        cfg = self.cfg
        auc = self.users[auctioneer]
        self._advance(auctioneer, t)
        if auc.completed and not auc.profile.helper and auc.remaining_to_assign <= 0:
            return
        bidders = self._candidate_bidders(auctioneer, t)
        if not bidders:
            if any(u.remaining_to_assign > 0 for u in self.users.values()):
                self._push(t + cfg.idle_retry_s, "ready", (auctioneer,))
            return

        t_res = t + cfg.overhead_time_per_auction_s
        h_est = auc.capacity_estimate()
        eff_cost = (auc.profile.cost_per_mbit
                    + (auc.profile.link_cost_per_s / h_est if h_est > 0
                       else 0.0))
        eff_profile = replace(auc.profile, cost_per_mbit=eff_cost)
        sf = ScoreFunction.efficient(eff_profile)

        allocation = self._resolve(t, auctioneer, bidders, sf, h_est)
        if not allocation:
            if any(u.remaining_to_assign > 0 for u in self.users.values()):
                self._push(t + cfg.idle_retry_s, "ready", (auctioneer,))
            return

        # Sequential downloads on the auctioneer's link, then the next auction.
        cursor = t_res
        for uid, bitrate in allocation:
            receiver = self.users[uid]
            beta = receiver.profile.ladder.segment_length_s
            start = cursor
            cursor = self.capacity.finish_time(auctioneer, start, bitrate * beta)
            realized_cost = (auc.profile.cost_per_mbit * bitrate * beta
                            + auc.profile.link_cost_per_s * (cursor - start))
            auc.cost += realized_cost
            avg_capacity = bitrate * beta / (cursor - start)
            auc.capacity_window.append(avg_capacity)
            seq_no = receiver.next_seq
            receiver.next_seq += 1
            receiver.pending += 1
            delay = cfg.d2d_delay_s if uid != auctioneer else 0.0
            self._push(cursor + delay, "deliver",
                       (uid, bitrate, seq_no, auctioneer))
            self._log(cursor, "segment_downloaded", downloader=auctioneer,
                      receiver=uid, bitrate=bitrate, seq=seq_no)
        self._push(cursor, "ready", (auctioneer,))

    def _resolve(self, t: float, auctioneer: str, bidders: List[str],
                 sf: ScoreFunction, h_est: float,
                 ) -> List[Tuple[str, float]]:
        """Run one auction; returns the download order as (receiver, bitrate)
        pairs and books utilities and payments."""
        cfg = self.cfg
        auc = self.users[auctioneer]
        t_res = t + cfg.overhead_time_per_auction_s
        caps = {}
        for uid in bidders:
            u = self.users[uid]
            beta = u.profile.ladder.segment_length_s
            caps[uid] = min(u.remaining_to_assign,
                            u.headroom_segments(beta, u.profile.ladder.max_buffer_s))

        if cfg.mechanism == "noncooperative":
            uid = bidders[0]
            u = self.users[uid]
            bitrate = self._policy_bitrate(u, sf, h_est)
            u.utility += utility_total(u.profile, u.state(), (bitrate,))
            self._log(t, "auction_start", auctioneer=auctioneer,
                      mechanism="noncooperative")
            self._log(t_res, "auction_resolved", auctioneer=auctioneer,
                      winners={uid: 1})
            return [(uid, bitrate)]

        self._log(t, "auction_start", auctioneer=auctioneer,
                  mechanism=cfg.mechanism, bidders=sorted(bidders))
        self.auction_count += 1
        auc.auctions_initiated += 1

        if cfg.mechanism == "momd":
            bids = [build_momd_bid(self.users[uid].profile,
                                   self.users[uid].state(), sf, cfg.K,
                                   max_segments=caps[uid])
                    if cfg.adaptation.kind == "optimal"
                    else self._policy_momd_bid(self.users[uid], sf, h_est,
                                               caps[uid])
                    for uid in bidders]
            k_eff = min(cfg.K, sum(b.max_segments for b in bids))
            outcome = resolve_vickrey_score(bids, sf, k_eff)
            self.assumption1_violations += len(outcome.assumption_violations)
            allocation: List[Tuple[str, float]] = []
            rates_iter = {uid: iter(outcome.winning_bitrates[uid])
                          for uid in outcome.winning_bitrates}
            for uid in outcome.per_segment_winners:
                allocation.append((uid, next(rates_iter[uid])))
            for uid, kappa in outcome.revised_allocation.items():
                if kappa == 0:
                    continue
                u = self.users[uid]
                payment = outcome.payments[uid]
                u.utility += utility_total(u.profile, u.state(),
                                           outcome.winning_bitrates[uid])
                u.payments_made += payment
                auc.payments_received += payment
            self._log(t_res, "auction_resolved", auctioneer=auctioneer,
                      winners={u: k for u, k in
                               outcome.revised_allocation.items() if k},
                      payments={u: p for u, p in outcome.payments.items()
                                if outcome.revised_allocation[u]})
            return allocation

        if cfg.mechanism == "somd":
            bids = []
            for uid in bidders:
                u = self.users[uid]
                if cfg.adaptation.kind == "optimal":
                    bids.append(optimal_somd_bid(u.profile, u.state(), sf))
                else:
                    r = self._policy_bitrate(u, sf, h_est)
                    bids.append(SomdBid(uid, r,
                                        utility_total(u.profile, u.state(), (r,))))
            if len(bids) == 1:
                winner_id, bitrate = bids[0].bidder_id, bids[0].bitrate
                payment = (0.0 if winner_id == auctioneer
                           else sf(bitrate))  # second score is implicitly 0
            else:
                outcome = resolve_second_score(bids, sf)
                winner_id, bitrate = outcome.winner_id, outcome.winning_bitrate
                payment = outcome.payment
            win = self.users[winner_id]
            win.utility += utility_total(win.profile, win.state(), (bitrate,))
            win.payments_made += payment
            auc.payments_received += payment
            self._log(t_res, "auction_resolved", auctioneer=auctioneer,
                      winners={winner_id: 1}, payments={winner_id: payment})
            return [(winner_id, bitrate)]

        # vickrey_1d: price-only bids at the policy-fixed bitrate
        pbids = []
        for uid in bidders:
            u = self.users[uid]
            r = self._policy_bitrate(u, sf, h_est)
            pbids.append(PriceBid(uid, utility_total(u.profile, u.state(), (r,)), r))
        if len(pbids) == 1:
            winner_id, bitrate, payment = pbids[0].bidder_id, pbids[0].bitrate, 0.0
        else:
            outcome = single_dimensional_vickrey_baseline(pbids)
            winner_id, bitrate, payment = (outcome.winner_id,
                                           outcome.winning_bitrate,
                                           outcome.payment)
        win = self.users[winner_id]
        win.utility += utility_total(win.profile, win.state(), (bitrate,))
        win.payments_made += payment
        auc.payments_received += payment
        self._log(t_res, "auction_resolved", auctioneer=auctioneer,
                  winners={winner_id: 1}, payments={winner_id: payment})
        return [(winner_id, bitrate)]

    def _policy_bitrate(self, u: _UserSim, sf: ScoreFunction,
                        h_est: float) -> float:
        if self.cfg.adaptation.kind == "optimal":
            return optimal_somd_bid(u.profile, u.state(), sf).bitrate
        return baseline_bitrate(self.cfg.adaptation, u.state(), h_est,
                                u.profile.ladder)

    def _policy_momd_bid(self, u: _UserSim, sf: ScoreFunction, h_est: float,
                         cap: int):
        from .momd import MomdBid
        from .strategy import truthful_price_vector

        r = baseline_bitrate(self.cfg.adaptation, u.state(), h_est,
                             u.profile.ladder)
        K = self.cfg.K
        cap = max(0, min(cap, K))
        rows = tuple((r,) * k + (0.0,) * (K - k) if k <= cap
                     else (0.0,) * K
                     for k in range(1, K + 1))
        prices = truthful_price_vector(u.profile, u.state(), rows)
        return MomdBid(u.profile.user_id, rows,
                       tuple(max(0.0, p) for p in prices))

    # -- main loop ---------------------------------------------------------

    def run(self) -> SimResult:
        for uid in self.users:
            self._push(0.0, "ready", (uid,))
        while self.queue:
            t, _, kind, data = heapq.heappop(self.queue)
            if kind == "ready":
                self._ready(t, data[0])
            elif kind == "deliver":
                self._deliver(t, data[0], data[1], data[2], data[3])
        # Flush remaining playback; everything is delivered, so no more stalls.
        for uid, u in self.users.items():
            if u.started and not u.completed:
                end = u.last_update + (self.cfg.video_length_s - u.played_s)
                self._advance(uid, end)
        return self._result()

    def _result(self) -> SimResult:
        cfg = self.cfg
        per_user: Dict[str, UserResult] = {}
        total_stall = 0.0
        total_video = 0.0
        total_drops = 0.0
        total_rate_volume = 0.0
        social = 0.0
        for uid, u in self.users.items():
            rates = [r for _, r in sorted(u.received)]
            overhead = u.auctions_initiated * cfg.overhead_energy_per_auction
            w = (u.utility - u.cost - overhead
                 + u.payments_received - u.payments_made)
            drops = sum(max(a - b, 0.0) for a, b in zip(rates, rates[1:]))
            per_user[uid] = UserResult(
                user_id=uid,
                welfare=w,
                utility=u.utility,
                cost=u.cost,
                payments_made=u.payments_made,
                payments_received=u.payments_received,
                overhead_energy=overhead,
                average_bitrate_mbps=sum(rates) / len(rates) if rates else 0.0,
                rebuffer_s=u.stall_s,
                rebuffer_ratio=(u.stall_s / cfg.video_length_s
                                if u.total_segments else 0.0),
                degradation_volume_mbps=drops,
                degradation_ratio=degradation_ratio(rates),
            )
            social += w
            total_stall += u.stall_s
            total_video += cfg.video_length_s if u.total_segments else 0.0
            total_drops += drops
            total_rate_volume += sum(rates)
        return SimResult(
            per_user=per_user,
            social_welfare=social,
            rebuffer_ratio=total_stall / total_video if total_video else 0.0,
            degradation_ratio=(total_drops / total_rate_volume
                               if total_rate_volume else 0.0),
            auction_count=self.auction_count,
            assumption1_violations=self.assumption1_violations,
            events=tuple(self.events),
        )


def run_simulation(cfg: SimConfig, capacity: CapacityTrace,
                   encounters: Optional[EncounterTrace] = None) -> SimResult:
    """Run one deterministic simulation against the given traces."""
    if encounters is None:
        encounters = EncounterTrace()
    for u in cfg.users:
        if u.user_id not in capacity.breakpoints:
            raise TraceUnderrunError(f"no capacity trace for user {u.user_id}")
    return _Simulation(cfg, capacity, encounters).run()


@dataclass
class ComparisonTable:
    columns: Tuple[str, ...]
    rows: List[Dict[str, object]]


def run_comparison(
    cells: Sequence[Tuple[str, SimConfig]],
    trace_generator: Callable[[int], Tuple[CapacityTrace, EncounterTrace]],
    replications: int,
    base_seed: int = 0,
) -> ComparisonTable:
    """Run each labelled config over shared per-replication traces and
    aggregate means (common random numbers across cells)."""
    sums = {label: {"social_welfare": 0.0, "rebuffer_ratio": 0.0,
                    "degradation_ratio": 0.0, "auction_count": 0.0,
                    "average_bitrate_mbps": 0.0}
            for label, _ in cells}
    for rep in range(replications):
        capacity, encounters = trace_generator(base_seed + rep)
        for label, cfg in cells:
            res = run_simulation(cfg, capacity, encounters)
            s = sums[label]
            s["social_welfare"] += res.social_welfare
            s["rebuffer_ratio"] += res.rebuffer_ratio
            s["degradation_ratio"] += res.degradation_ratio
            s["auction_count"] += res.auction_count
            rates = [r.average_bitrate_mbps for r in res.per_user.values()
                     if r.average_bitrate_mbps > 0]
            s["average_bitrate_mbps"] += (sum(rates) / len(rates)
                                          if rates else 0.0)
    columns = ("cell", "social_welfare", "rebuffer_ratio",
               "degradation_ratio", "auction_count", "average_bitrate_mbps")
    rows = []
    for label, _ in cells:
        row: Dict[str, object] = {"cell": label}
        for k, v in sums[label].items():
            row[k] = v / replications
        rows.append(row)
    return ComparisonTable(columns=columns, rows=rows)
