"""Bidder-side decision logic: optimal bitrate matrices, truthful prices,
baseline bitrate-adaptation policies, and the participation filter.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Sequence, Tuple

from .model import (
    BitrateLadder,
    UserProfile,
    UserState,
    degradation_single,
    quality_gain_single,
    utility_total,
)
from .momd import MomdBid
from .somd import ScoreFunction

CostOfRate = Callable[[float], float]


@dataclass(frozen=True)
class ParticipationConfig:
    """Coefficients steering how eagerly a bidder skips a weak auctioneer."""

    alpha_buf: float = 1.0
    alpha_link: float = 0.5

    def __post_init__(self):
        if self.alpha_buf < 0 or self.alpha_link < 0:
            raise ValueError("participation coefficients must be >= 0")


@dataclass(frozen=True)
class AdaptationPolicy:
    """Baseline bitrate-adaptation rule used by non-auction comparisons."""

    kind: str  # optimal | buffer_based | bandwidth_based | hybrid
    thresholds: Dict[str, float] = field(default_factory=dict)

    KINDS = ("optimal", "buffer_based", "bandwidth_based", "hybrid")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown adaptation policy {self.kind!r}")


def optimal_row_rate(profile: UserProfile, state: UserState,
                     cost_of_rate: CostOfRate, kappa: int) -> float:
    """Best common bitrate for a row of kappa segments.

    Scalar reduction of the per-row problem: maximize
    kappa * g(r) - loss(prev, r) with g(r) = quality gain - cost.
    Ties go to the lowest rate.
    """
    best_rate = None
    best_obj = None
    for r in profile.ladder.rates:
        g = quality_gain_single(profile, r) - cost_of_rate(r)
        obj = kappa * g - degradation_single(profile, state.prev_bitrate, r)
        if best_obj is None or obj > best_obj:
            best_rate, best_obj = r, obj
    return best_rate


def optimal_bitrate_matrix(profile: UserProfile, state: UserState,
                           cost_of_rate: CostOfRate, K: int,
                           max_segments: int | None = None,
                           ) -> Tuple[Tuple[float, ...], ...]:
    """Optimal K x K lower-triangular bitrate matrix for a bidder.

    Every row uses one common rate (the per-row optimum), and rates are
    non-increasing down the rows. max_segments caps the non-empty rows,
    e.g. to the bidder's remaining buffer headroom.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    cap = K if max_segments is None else max(0, min(max_segments, K))
    rows = []
    for kappa in range(1, K + 1):
        if kappa <= cap:
            r = optimal_row_rate(profile, state, cost_of_rate, kappa)
            rows.append((r,) * kappa + (0.0,) * (K - kappa))
        else:
            rows.append((0.0,) * K)
    return tuple(rows)


def brute_force_bitrate_rows(profile: UserProfile, state: UserState,
                             cost_of_rate: CostOfRate, K: int,
                             ) -> Tuple[Tuple[float, ...], ...]:
    """Per-row optimum by full enumeration over every ladder vector.

    Oracle for the structure of the fast solver; exponential in K, so keep
    K small. Ties go to the lexicographically smallest vector.
    """
    rows = []
    for kappa in range(1, K + 1):
        best_vec = None
        best_obj = None
        for vec in itertools.product(profile.ladder.rates, repeat=kappa):
            obj = (sum(quality_gain_single(profile, r) - cost_of_rate(r)
                       for r in vec)
                   - _sequence_loss(profile, state.prev_bitrate, vec))
            if best_obj is None or obj > best_obj:
                best_vec, best_obj = vec, obj
        rows.append(best_vec)
    return tuple(rows)


def _sequence_loss(profile: UserProfile, prev: float,
                   vec: Sequence[float]) -> float:
    loss = 0.0
    for r in vec:
        loss += degradation_single(profile, prev, r)
        prev = r
    return loss


def truthful_price_vector(profile: UserProfile, state: UserState,
                          matrix: Sequence[Sequence[float]],
                          ) -> Tuple[float, ...]:
    """Per-row true utility: the dominant-strategy price for each segment count."""
    prices = []
    for kappa, row in enumerate(matrix, start=1):
        rates = tuple(r for r in row[:kappa] if r != 0)
        prices.append(utility_total(profile, state, rates) if rates else 0.0)
    return tuple(prices)


def build_momd_bid(profile: UserProfile, state: UserState, sf: ScoreFunction,
                   K: int, max_segments: int | None = None) -> MomdBid:
    """Optimal bitrate matrix plus truthful prices, packaged as a bid.

    Prices are floored at zero: a row whose true utility is negative is never
    worth winning, and bids carry non-negative willingness-to-pay.
    """
    matrix = optimal_bitrate_matrix(profile, state, sf, K,
                                    max_segments=max_segments)
    prices = truthful_price_vector(profile, state, matrix)
    return MomdBid(
        bidder_id=profile.user_id,
        bitrate_matrix=matrix,
        price_vector=tuple(max(0.0, p) for p in prices),
    )


def should_participate(profile: UserProfile, state: UserState,
                       auctioneer_capacity: float,
                       neighbor_capacity_shares: Sequence[float],
                       cfg: ParticipationConfig) -> bool:
    """Participation filter: refrain only when the auctioneer's link is weak
    on both the buffer test and the alternative-capacity test.

    An empty buffer counts as satisfying the buffer test (its threshold
    diverges), so a starving user still refrains when a better link is
    around and otherwise takes whatever capacity exists.
    """
    if auctioneer_capacity < 0 or any(h < 0 for h in neighbor_capacity_shares):
        raise ValueError("capacities must be >= 0")
    beta = profile.ladder.segment_length_s
    if state.buffer_s == 0:
        buffer_hit = True
    else:
        threshold = (cfg.alpha_buf * state.prev_bitrate * beta
                     / state.buffer_s)
        buffer_hit = auctioneer_capacity < threshold
    link_threshold = cfg.alpha_link * sum(neighbor_capacity_shares)
    refrain = buffer_hit and auctioneer_capacity < link_threshold
    return not refrain


def baseline_bitrate(policy: AdaptationPolicy, state: UserState,
                     est_capacity: float, ladder: BitrateLadder) -> float:
    """Bitrate choice of the comparison policies.

    bandwidth_based: highest rate within the capacity estimate;
    buffer_based: ladder index proportional to buffer fill;
    hybrid: the more conservative of the two.
    """
    if policy.kind == "bandwidth_based":
        return _bw_rate(est_capacity, ladder)
    if policy.kind == "buffer_based":
        return _buf_rate(state, ladder)
    if policy.kind == "hybrid":
        return min(_bw_rate(est_capacity, ladder), _buf_rate(state, ladder))
    raise ValueError(f"baseline_bitrate does not handle policy {policy.kind!r}")


def _bw_rate(est_capacity: float, ladder: BitrateLadder) -> float:
    fitting = [r for r in ladder.rates if r <= est_capacity]
    return fitting[-1] if fitting else ladder.rates[0]


def _buf_rate(state: UserState, ladder: BitrateLadder) -> float:
    z = ladder.num_rates
    idx = math.floor(z * state.buffer_s / ladder.max_buffer_s)
    idx = max(1, min(z, idx))
    return ladder.rates[idx - 1]
