"""Monte Carlo simulator for the multi-round placement family.

Faithful to the protocol: per round every uncommitted ball draws its bin
targets uniformly at random with replacement; each bin answers as many
received requests as it has free slots (a uniform subset, or lowest-ranks-
first with uniform tie-breaking in ranked mode); an answered ball commits to
one responding bin (uniform choice, or its lowest answered rank) and leaves.

Message accounting: every request and every response is one message, plus one
commit message per placed ball; ``messages_total`` is their sum.

Implementation notes.  A round is resolved with one radix sort: every message
gets a 63-bit integer key laid out as (bin | rank | random tie bits), so the
sorted order within one bin is exactly the bin's answering priority, and the
first ``free slots`` entries of each bin's run are the answered requests.
The tie bits carry >= 29 bits of entropy, so tie-break collisions are rarer
than one in 5e8 per bin and only perturb tie ordering when they do occur.
Randomness comes from numpy's PCG64 (``default_rng``); ``simulate_many``
derives per-trial generators as ``SeedSequence(seed).spawn(trials)[i]``, which
fixes the bit-exact output for a given (config, seed) pair.  Peak memory is a
few int64/float64 arrays of one message-table length, ~1.6 GB for 5e7
messages, so one trial at ten million balls fits comfortably in 4 GB.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from binload.model import (
    AlgorithmSpec,
    InvariantViolation,
    PopulationSpec,
    SimOutcome,
    SimRoundRecord,
    ValidationError,
    validate_population,
    validate_spec,
)

SeedLike = "int | np.random.SeedSequence"


def _one_round(
    rng: np.random.Generator,
    bins: int,
    capacity: int,
    loads: np.ndarray,
    active: int,
    messages: int,
    ranked: bool,
) -> tuple[int, int, int]:
    """Play one synchronous round, mutating ``loads``.

    Returns (balls_committed, requests_sent, responses_sent).
    """
    total = active * messages
    dest = rng.integers(0, bins, size=total, dtype=np.int64)

    bin_bits = max(1, (bins - 1).bit_length())
    rank_bits = max(1, (messages - 1).bit_length()) if ranked and messages > 1 else 0
    tie_bits = 63 - bin_bits - rank_bits
    if tie_bits < 20:
        raise ValidationError(
            f"cannot build sort keys for bins={bins}, messages={messages}: "
            f"only {tie_bits} tie-break bits would remain"
        )
    key = dest << (63 - bin_bits)
    if rank_bits:
        ranks = np.arange(total, dtype=np.int64) % messages
        key |= ranks << tie_bits
        del ranks
    key |= rng.integers(0, 1 << tie_bits, size=total, dtype=np.int64)

    order = np.argsort(key, kind="stable")
    del key
    sorted_dest = dest[order]
    counts = np.bincount(dest, minlength=bins)
    starts = np.zeros(bins, dtype=np.int64)
    np.cumsum(counts[:-1], out=starts[1:])
    pos = np.arange(total, dtype=np.int64) - starts[sorted_dest]
    room = capacity - loads
    answered_sorted = pos < room[sorted_dest]
    del pos, starts, counts, sorted_dest, room
    answered = np.empty(total, dtype=bool)
    answered[order] = answered_sorted
    del order, answered_sorted
    responses = int(np.count_nonzero(answered))

    grid = answered.reshape(active, messages)
    has = grid.any(axis=1)
    if ranked:
        pick = grid.argmax(axis=1)  # first answered message = lowest rank
    else:
        w = rng.random(total)
        w[~answered] = 2.0  # never the minimum
        pick = w.reshape(active, messages).argmin(axis=1)
        del w
    del answered
    rows = np.flatnonzero(has)
    chosen = dest.reshape(active, messages)[rows, pick[rows]]
    del dest, grid, has, pick
    loads += np.bincount(chosen, minlength=bins)
    if loads.max(initial=0) > capacity:
        raise InvariantViolation(
            f"a bin exceeded its capacity {capacity} after commits"
        )
    return int(rows.size), total, responses


def simulate_run(spec: AlgorithmSpec, pop: PopulationSpec, seed) -> SimOutcome:
    """Execute one full run of *spec* over *pop*.

    ``seed`` is an integer or a numpy ``SeedSequence``; the same seed always
    reproduces the same outcome bit for bit.
    """
    validate_spec(spec)
    validate_population(pop)
    rng = np.random.default_rng(seed)
    loads = np.zeros(pop.bins, dtype=np.int64)
    active = pop.balls
    records: list[SimRoundRecord] = []
    commits = requests = responses = 0
    for r in range(spec.rounds):
        m_r = spec.messages_per_round[r]
        l_r = spec.capacity_per_round[r]
        if active > 0:
            placed, req, resp = _one_round(
                rng, pop.bins, l_r, loads, active, m_r, spec.ranked
            )
        else:
            placed = req = resp = 0
        active -= placed
        commits += placed
        requests += req
        responses += resp
        hist = np.bincount(loads, minlength=l_r + 1)
        in_bins = int((np.arange(hist.size) * hist).sum())
        if in_bins + active != pop.balls:
            raise InvariantViolation(
                f"round {r + 1}: {in_bins} balls in bins + {active} remaining "
                f"!= {pop.balls}"
            )
        records.append(
            SimRoundRecord(
                balls_remaining=active,
                load_histogram=tuple(int(c) for c in hist),
                requests_sent=req,
                responses_sent=resp,
            )
        )
    return SimOutcome(
        per_round=tuple(records),
        commits_total=commits,
        messages_total=requests + responses + commits,
    )


@dataclass(frozen=True)
class TrialConfig:
    """A reproducible batch: algorithm, population, master seed, trial count."""

    spec: AlgorithmSpec
    pop: PopulationSpec
    seed: int = 0
    trials: int = 1

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValidationError(f"trials must be >= 1, got {self.trials}")
        if not (0 <= int(self.seed) < 2**64):
            raise ValidationError(f"seed must fit in 64 unsigned bits, got {self.seed}")


@dataclass(frozen=True)
class MetricSummary:
    """Across-trial sample statistics of one scalar metric."""

    mean: float
    minimum: float
    maximum: float
    stddev: float  # sample standard deviation (ddof=1); 0.0 for a single trial

    @staticmethod
    def of(values: np.ndarray) -> "MetricSummary":
        arr = np.asarray(values, dtype=float)
        sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        return MetricSummary(
            mean=float(arr.mean()),
            minimum=float(arr.min()),
            maximum=float(arr.max()),
            stddev=sd,
        )

    def __post_init__(self) -> None:
        if not (self.minimum <= self.mean <= self.maximum):
            raise InvariantViolation(
                f"metric summary out of order: {self.minimum} / {self.mean} / {self.maximum}"
            )


@dataclass(frozen=True)
class SimStats:
    """Aggregated measurements over the trials of one TrialConfig.

    ``remaining_fraction[r]`` summarizes (balls still unplaced after round
    r+1) / balls; ``load_fractions[r][l]`` the fraction of bins at load l
    after round r+1; the message metrics are per-round and whole-run counts.
    """

    trials: int
    remaining_fraction: tuple[MetricSummary, ...]
    load_fractions: tuple[tuple[MetricSummary, ...], ...]
    requests_sent: tuple[MetricSummary, ...]
    responses_sent: tuple[MetricSummary, ...]
    commits_total: MetricSummary
    messages_total: MetricSummary


def aggregate_outcomes(
    outcomes: "list[SimOutcome] | tuple[SimOutcome, ...]",
    pop: PopulationSpec,
) -> SimStats:
    """Summarize same-shaped outcomes (helper shared with the baselines)."""
    if not outcomes:
        raise ValidationError("cannot aggregate zero outcomes")
    rounds = len(outcomes[0].per_round)
    if any(len(o.per_round) != rounds for o in outcomes):
        raise ValidationError("outcomes disagree on round count")
    remaining = []
    loads = []
    reqs = []
    resps = []
    for r in range(rounds):
        recs = [o.per_round[r] for o in outcomes]
        remaining.append(
            MetricSummary.of(
                np.array([rec.balls_remaining for rec in recs]) / pop.balls
            )
        )
        width = max(len(rec.load_histogram) for rec in recs)
        table = np.zeros((len(recs), width))
        for i, rec in enumerate(recs):
            table[i, : len(rec.load_histogram)] = rec.load_histogram
        table /= pop.bins
        loads.append(tuple(MetricSummary.of(table[:, l]) for l in range(width)))
        reqs.append(MetricSummary.of(np.array([rec.requests_sent for rec in recs])))
        resps.append(MetricSummary.of(np.array([rec.responses_sent for rec in recs])))
    return SimStats(
        trials=len(outcomes),
        remaining_fraction=tuple(remaining),
        load_fractions=tuple(loads),
        requests_sent=tuple(reqs),
        responses_sent=tuple(resps),
        commits_total=MetricSummary.of(np.array([o.commits_total for o in outcomes])),
        messages_total=MetricSummary.of(np.array([o.messages_total for o in outcomes])),
    )


def simulate_many(cfg: TrialConfig) -> SimStats:
    """Run ``cfg.trials`` independent trials and aggregate.

    Trial i uses the generator seeded by ``SeedSequence(cfg.seed).spawn(...)[i]``,
    so results are deterministic and trials could be farmed out concurrently
    and merged in index order without changing the output.
    """
    validate_spec(cfg.spec)
    validate_population(cfg.pop)
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.trials)
    outcomes = [simulate_run(cfg.spec, cfg.pop, child) for child in children]
    return aggregate_outcomes(outcomes, cfg.pop)
