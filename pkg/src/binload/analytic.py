"""Iterative expectation engine for the multi-round placement family.

The number of requests landing in a bin is modelled as Poisson with rate
``requests / bins``; the engine folds one closed-form update per round over
the remaining-ball fraction and the bin-load distribution.

Numerical policy: every probability series is a sum of non-negative terms,
so partial sums never cancel.  Series carrying ``1/(m+1)``-style factors are
summed until the running term drops below ``epsilon`` relative to the total;
pure Poisson tails close the remainder in one step.  Probabilities that
approach 1 (a lone request being answered in a late round) are represented by
their directly-summed complements, and per-round survivor fractions are
multiplied in complement space, which keeps end-of-run expectations accurate
down to the 1e-19 scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from binload.model import (
    MASS_TOL,
    AlgorithmSpec,
    CapacityRegression,
    EstimateReport,
    InvariantViolation,
    LoadDistribution,
    PopulationSpec,
    RoundRecord,
    RoundState,
    initial_state,
    total_mass,
    validate_population,
    validate_spec,
)


@dataclass(frozen=True)
class PoissonTruncation:
    """Where infinite Poisson-weighted series are cut off.

    ``epsilon`` is the relative size at which a (decreasing) term stops the
    summation.  ``hard_cap`` bounds the number of terms outright; when left
    unset a rate-dependent cap of ``ceil(rate + 40*sqrt(rate+1) + 60)`` is
    used, far beyond any mass a double can resolve.
    """

    epsilon: float = 1e-16
    hard_cap: int | None = None

    def __post_init__(self) -> None:
        if not (0.0 < self.epsilon < 1.0):
            raise ValueError(f"epsilon must be in (0, 1), got {self.epsilon!r}")
        if self.hard_cap is not None and self.hard_cap < 1:
            raise ValueError(f"hard_cap must be >= 1, got {self.hard_cap!r}")

    def cap_for(self, rate: float) -> int:
        if self.hard_cap is not None:
            return self.hard_cap
        return math.ceil(rate + 40.0 * math.sqrt(rate + 1.0) + 60.0)


DEFAULT_TRUNCATION = PoissonTruncation()


def poisson_weight(rate: float, count: int) -> float:
    """P[Poisson(rate) = count], with the 0**0 = 1 convention at rate 0."""
    if rate < 0.0:
        raise ValueError(f"rate must be >= 0, got {rate!r}")
    if count < 0:
        return 0.0
    if rate == 0.0:
        return 1.0 if count == 0 else 0.0
    return math.exp(count * math.log(rate) - rate - math.lgamma(count + 1))


def _upper_tail(rate: float, start: int, trunc: PoissonTruncation) -> float:
    """P[Poisson(rate) >= start] by direct ascending summation."""
    if start <= 0:
        return 1.0
    if rate == 0.0:
        return 0.0
    term = poisson_weight(rate, start)
    if term == 0.0:
        # Deep in a tail the pmf underflows; the side of the mode decides.
        return 1.0 if start < rate else 0.0
    total = term
    limit = max(trunc.cap_for(rate), start + 8)
    m = start
    while m < limit:
        m += 1
        term *= rate / m
        total += term
        if term <= trunc.epsilon * total and m >= rate:
            break
    return min(total, 1.0)


def _lower_cdf(rate: float, upto: int, trunc: PoissonTruncation) -> float:
    """P[Poisson(rate) <= upto]."""
    if upto < 0:
        return 0.0
    if rate == 0.0:
        return 1.0
    term = poisson_weight(rate, 0)
    if term == 0.0:
        return max(0.0, 1.0 - _upper_tail(rate, upto + 1, trunc))
    total = term
    for m in range(1, upto + 1):
        term *= rate / m
        total += term
    return min(total, 1.0)


def single_response_prob(
    rate: float, capacity: int, trunc: PoissonTruncation = DEFAULT_TRUNCATION
) -> float:
    """Probability that one tagged request is answered by a bin with
    *capacity* free slots when the competing requests are Poisson(*rate*).

    With ``m`` competitors the bin answers ``min(capacity, m + 1)`` of the
    ``m + 1`` requests uniformly, so the tagged one wins with probability
    ``min(1, capacity / (m + 1))``.
    """
    if capacity <= 0:
        return 0.0
    if rate == 0.0:
        return 1.0
    head = _lower_cdf(rate, capacity - 1, trunc)
    # sum_{m >= c} pois(m) * c/(m+1)  ==  (c/rate) * P[Poisson(rate) >= c+1]
    return min(1.0, head + (capacity / rate) * _upper_tail(rate, capacity + 1, trunc))


def single_nonresponse_prob(
    rate: float, capacity: int, trunc: PoissonTruncation = DEFAULT_TRUNCATION
) -> float:
    """Complement of :func:`single_response_prob`, summed directly.

    Every term of ``sum_{m>=c} pois(m) * (m+1-c)/(m+1)`` is non-negative, so
    the result keeps full relative precision even when it is tiny -- which is
    exactly the late-round regime that drives end-of-run survivor products.
    """
    if capacity <= 0:
        return 1.0
    if rate == 0.0:
        return 0.0
    term = poisson_weight(rate, capacity)
    if capacity < rate and term < 1e-280:
        # pmf (nearly) underflowed left of the mode.  Seeding the series from
        # a subnormal would cost ~8 digits, while the asymptotic form
        # E[1 - c/(N+1)] = 1 - c/rate drops only O(pmf) < 1e-277 of mass.
        return max(0.0, 1.0 - capacity / rate)
    if term == 0.0:
        return 0.0
    total = term * (1.0 / (capacity + 1))
    limit = max(trunc.cap_for(rate), capacity + 8)
    m = capacity
    while m < limit:
        m += 1
        term *= rate / m
        total += term * ((m + 1 - capacity) / (m + 1))
        if term <= trunc.epsilon * max(total, 1e-300) and m >= rate:
            break
    return min(total, 1.0)


def _state_response_prob(
    state: RoundState, messages: int, capacity: int, trunc: PoissonTruncation
) -> tuple[float, float]:
    """(answered, unanswered) probability for one unranked request, averaged
    over the current load profile."""
    rate = messages * state.remaining_fraction
    hit = math.fsum(
        f * single_response_prob(rate, capacity - load, trunc)
        for load, f in enumerate(state.loads.fractions)
        if f
    )
    miss = math.fsum(
        f * single_nonresponse_prob(rate, capacity - load, trunc)
        for load, f in enumerate(state.loads.fractions)
        if f
    )
    return min(hit, 1.0), min(miss, 1.0)


def commit_prob_unranked(
    response_prob: float, messages: int, *, nonresponse_prob: float | None = None
) -> float:
    """Probability that a ball with *messages* unranked requests commits.

    The complement is taken as a power of the directly-summed non-response
    probability when available; it is never rebuilt from ``1 - p``.
    """
    if messages < 1:
        raise ValueError(f"messages must be >= 1, got {messages}")
    miss = nonresponse_prob if nonresponse_prob is not None else 1.0 - response_prob
    return 1.0 - miss**messages


def choose_prob_unranked(
    response_prob: float, messages: int, *, nonresponse_prob: float | None = None
) -> float:
    """Probability that a specific answering bin is the one the ball joins.

    Equal to ``(1 - (1-p)^M) / (p * M)`` but evaluated as the geometric mean
    ``sum_{i<M} (1-p)^i / M``, which is exact at ``p = 0`` (limit 1) and for
    ``M = 1``.
    """
    if messages < 1:
        raise ValueError(f"messages must be >= 1, got {messages}")
    miss = nonresponse_prob if nonresponse_prob is not None else 1.0 - response_prob
    return math.fsum(miss**i for i in range(messages)) / messages


def _binom_pmf(trials: int, successes: int, p: float) -> float:
    if successes < 0 or successes > trials:
        return 0.0
    return math.comb(trials, successes) * p**successes * (1.0 - p) ** (trials - successes)


def load_update_unranked(
    state: RoundState,
    messages: int,
    capacity: int,
    response_prob: float,
    choose_prob: float,
    trunc: PoissonTruncation = DEFAULT_TRUNCATION,
) -> LoadDistribution:
    """Next load distribution for an unranked round.

    A bin with ``room`` free slots that receives ``m`` requests answers
    ``min(m, room)`` of them, and each answered ball joins it independently
    with probability *choose_prob*; requests beyond ``room`` collapse into a
    single Poisson-tail bucket.
    """
    prev = state.loads.fractions
    if capacity < len(prev) - 1:
        raise CapacityRegression(
            f"capacity {capacity} is below an already-reached load {len(prev) - 1}"
        )
    rate = messages * state.remaining_fraction
    new = [0.0] * (capacity + 1)
    for load, f in enumerate(prev):
        if f == 0.0:
            continue
        room = capacity - load
        pmf = [poisson_weight(rate, m) for m in range(room)]
        tail = _upper_tail(rate, room, trunc)
        for gained in range(room + 1):
            acc = tail * _binom_pmf(room, gained, choose_prob)
            for m in range(gained, room):
                acc += pmf[m] * _binom_pmf(m, gained, choose_prob)
            new[load + gained] += f * acc
    result = LoadDistribution(tuple(new))
    added = result.mean_load - state.loads.mean_load
    expected = rate * response_prob * choose_prob
    if abs(added - expected) > MASS_TOL:
        raise InvariantViolation(
            f"unranked load update moved {added!r} balls per bin, expected {expected!r}"
        )
    return result


def rank_response_prob(
    rank: int,
    state: RoundState,
    capacity: int,
    trunc: PoissonTruncation = DEFAULT_TRUNCATION,
) -> float:
    """Probability that the rank-*rank* request of a ball is answered.

    Lower-rank traffic at the contacted bin is Poisson with rate
    ``(rank - 1) * remaining_fraction`` and is served first; the request then
    competes with same-rank traffic for whatever room is left.
    """
    if rank < 1:
        raise ValueError(f"rank must be >= 1, got {rank}")
    rate_same = state.remaining_fraction
    rate_lower = (rank - 1) * rate_same
    total = 0.0
    for load, f in enumerate(state.loads.fractions):
        if f == 0.0:
            continue
        room = capacity - load
        inner = math.fsum(
            poisson_weight(rate_lower, m) * single_response_prob(rate_same, room - m, trunc)
            for m in range(room)
        )
        total += f * inner
    return min(total, 1.0)


def _rank_nonresponse_prob(
    rank: int, state: RoundState, capacity: int, trunc: PoissonTruncation
) -> float:
    """Complement of :func:`rank_response_prob` from non-negative terms only."""
    rate_same = state.remaining_fraction
    rate_lower = (rank - 1) * rate_same
    total = 0.0
    for load, f in enumerate(state.loads.fractions):
        if f == 0.0:
            continue
        room = capacity - load
        miss = _upper_tail(rate_lower, room, trunc)
        miss += math.fsum(
            poisson_weight(rate_lower, m) * single_nonresponse_prob(rate_same, room - m, trunc)
            for m in range(room)
        )
        total += f * miss
    return min(total, 1.0)


def commit_prob_ranked(
    rank_probs: tuple[float, ...], *, complements: tuple[float, ...] | None = None
) -> tuple[float, float]:
    """(commit probability, survivor fraction) for one ranked round.

    The survivor fraction is the direct product of per-rank complements; it is
    never reconstructed as ``1 - commit_probability``.
    """
    if not rank_probs:
        raise ValueError("rank_probs must be non-empty")
    miss = complements if complements is not None else tuple(1.0 - p for p in rank_probs)
    survivor = 1.0
    for s in miss:
        survivor *= s
    return 1.0 - survivor, survivor


def load_update_ranked(
    state: RoundState,
    messages: int,
    capacity: int,
    rank_probs: tuple[float, ...],
    trunc: PoissonTruncation = DEFAULT_TRUNCATION,
    *,
    complements: tuple[float, ...] | None = None,
) -> LoadDistribution:
    """Next load distribution for a ranked round.

    Ranks are folded in increasing order while threading the bin's residual
    room: rank ``i`` arrivals are Poisson, arrivals at or beyond the residual
    collapse into one tail bucket, each answered request converts to a commit
    independently with probability ``prod_{j<i} (1 - p_j)`` (the chance the
    ball was not already served at a lower rank).
    """
    prev = state.loads.fractions
    if capacity < len(prev) - 1:
        raise CapacityRegression(
            f"capacity {capacity} is below an already-reached load {len(prev) - 1}"
        )
    if len(rank_probs) != messages:
        raise ValueError(f"expected {messages} rank probabilities, got {len(rank_probs)}")
    rate_same = state.remaining_fraction
    miss = complements if complements is not None else tuple(1.0 - p for p in rank_probs)
    convert = [1.0]
    for s in miss[:-1]:
        convert.append(convert[-1] * s)

    pmf_same = [poisson_weight(rate_same, m) for m in range(capacity)]
    tail_same = [_upper_tail(rate_same, c, trunc) for c in range(capacity + 1)]
    # binom[i][r][k]: k of r answered requests convert at rank i.
    binom = [
        [[_binom_pmf(r, k, pc) for k in range(r + 1)] for r in range(capacity + 1)]
        for pc in convert
    ]

    new = [0.0] * (capacity + 1)
    for load, f in enumerate(prev):
        if f == 0.0:
            continue
        room = capacity - load
        # dp[res][j]: probability of `res` free slots left and `j` commits.
        dp = [[0.0] * (room + 1) for _ in range(room + 1)]
        dp[room][0] = 1.0
        for table in binom:
            ndp = [[0.0] * (room + 1) for _ in range(room + 1)]
            for res in range(room + 1):
                row = dp[res]
                for j in range(room + 1):
                    w = row[j]
                    if w == 0.0:
                        continue
                    if res == 0:
                        ndp[0][j] += w
                        continue
                    for m in range(res):
                        base = w * pmf_same[m]
                        conv = table[m]
                        for k in range(m + 1):
                            ndp[res - m][j + k] += base * conv[k]
                    base = w * tail_same[res]
                    conv = table[res]
                    for k in range(res + 1):
                        ndp[0][j + k] += base * conv[k]
            dp = ndp
        for j in range(room + 1):
            gained = math.fsum(dp[res][j] for res in range(room + 1))
            new[load + j] += f * gained

    result = LoadDistribution(tuple(new))
    added = result.mean_load - state.loads.mean_load
    expected = rate_same * math.fsum(
        (1.0 - s) * pc for s, pc in zip(miss, convert)
    )
    if abs(added - expected) > MASS_TOL:
        raise InvariantViolation(
            f"ranked load update moved {added!r} balls per bin, expected {expected!r}"
        )
    return result


def advance_round(
    state: RoundState,
    messages: int,
    capacity: int,
    ranked: bool,
    trunc: PoissonTruncation = DEFAULT_TRUNCATION,
) -> tuple[RoundState, RoundRecord]:
    """Fold one round of the expectation engine."""
    if messages < 1:
        raise ValueError(f"messages must be >= 1, got {messages}")
    if capacity < 1:
        raise ValueError(f"capacity must be >= 1, got {capacity}")
    if ranked:
        misses = tuple(
            _rank_nonresponse_prob(rank, state, capacity, trunc)
            for rank in range(1, messages + 1)
        )
        probs: tuple[float, ...] | None = tuple(1.0 - s for s in misses)
        commit_p, survivor = commit_prob_ranked(probs, complements=misses)
        loads = load_update_ranked(
            state, messages, capacity, probs, trunc, complements=misses
        )
    else:
        hit, miss = _state_response_prob(state, messages, capacity, trunc)
        survivor = miss**messages
        commit_p = commit_prob_unranked(hit, messages, nonresponse_prob=miss)
        choose_p = choose_prob_unranked(hit, messages, nonresponse_prob=miss)
        loads = load_update_unranked(state, messages, capacity, hit, choose_p, trunc)
        probs = None
    after = RoundState(
        remaining_fraction=state.remaining_fraction * survivor,
        loads=loads,
        requests_so_far=state.requests_so_far + messages * state.remaining_fraction,
        round_index=state.round_index + 1,
    )
    committed = loads.mean_load - state.loads.mean_load
    if abs(committed - state.remaining_fraction * commit_p) > MASS_TOL:
        raise InvariantViolation(
            f"round {state.round_index}: committed mass {committed!r} does not match "
            f"remaining * commit probability {state.remaining_fraction * commit_p!r}"
        )
    record = RoundRecord(
        state_before=state,
        commit_probability=commit_p,
        rank_probabilities=probs,
        state_after=after,
        survivor_fraction=survivor,
    )
    return after, record


def run_estimate(
    spec: AlgorithmSpec,
    pop: PopulationSpec,
    trunc: PoissonTruncation = DEFAULT_TRUNCATION,
) -> EstimateReport:
    """Fold all rounds of *spec* over *pop* and assemble the report."""
    validate_spec(spec)
    validate_population(pop)
    state = initial_state(pop)
    target = pop.balls / pop.bins
    records: list[RoundRecord] = []
    warning = False
    for r in range(spec.rounds):
        state, record = advance_round(
            state,
            spec.messages_per_round[r],
            spec.capacity_per_round[r],
            spec.ranked,
            trunc,
        )
        records.append(record)
        if abs(total_mass(state) - target) > MASS_TOL * max(1.0, target):
            raise InvariantViolation(
                f"ball mass {total_mass(state)!r} drifted from {target!r} "
                f"after round {r + 1}"
            )
        expected_balls = state.remaining_fraction * pop.bins
        if 0.0 < expected_balls < math.log(pop.bins) ** 3:
            # Below polylog(n) survivors the expectation still falls but the
            # per-run spread is no longer tightly concentrated.
            warning = True
    final_expected = state.remaining_fraction * pop.bins
    placed = pop.balls - final_expected
    return EstimateReport(
        per_round=tuple(records),
        final_remaining_fraction=state.remaining_fraction,
        final_remaining_expected=final_expected,
        failure_probability_bound=final_expected if final_expected < 1.0 else None,
        total_messages_upper_bound=placed + 2.0 * pop.bins * state.requests_so_far,
        requests_per_bin=state.requests_so_far,
        bins=pop.bins,
        balls=pop.balls,
        ranked=spec.ranked,
        concentration_warning=warning,
    )
