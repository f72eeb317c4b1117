"""Shared domain types for the estimator, the simulator, and the baselines.

All types are immutable values; functions that "modify" state return new
instances.  Ball counts are carried as fractions of the number of bins so the
analytic engine stays size-free until results are reported.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

#: Tolerance for load-distribution normalization checks.
NORMALIZATION_TOL = 1e-9
#: Tolerance for ball-mass conservation checks.
MASS_TOL = 1e-9


class ValidationError(ValueError):
    """A configuration violates a structural constraint."""


class ZeroParameter(ValidationError):
    """A count that must be positive is zero or negative."""


class NonMonotoneCapacity(ValidationError):
    """Per-round capacities decrease between rounds."""


class CapacityRegression(ValidationError):
    """An update was asked to use a capacity below an already-reached load."""


class InvariantViolation(RuntimeError):
    """An internal conservation or normalization cross-check failed."""


@dataclass(frozen=True)
class AlgorithmSpec:
    """Parameters of one member of the placement family.

    ``messages_per_round[i]`` is the number of requests an unplaced ball sends
    in round ``i``; ``capacity_per_round[i]`` is the bin load threshold for
    that round.  ``ranked`` selects preference-ordered requests.
    """

    rounds: int
    messages_per_round: tuple[int, ...]
    capacity_per_round: tuple[int, ...]
    ranked: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "messages_per_round", tuple(int(m) for m in self.messages_per_round)
        )
        object.__setattr__(
            self, "capacity_per_round", tuple(int(c) for c in self.capacity_per_round)
        )


@dataclass(frozen=True)
class PopulationSpec:
    """Problem size: ``bins`` bins and ``balls`` balls to place."""

    bins: int
    balls: int


def validate_spec(spec: AlgorithmSpec) -> AlgorithmSpec:
    """Check structural invariants of *spec*; return it unchanged if valid.

    Raises :class:`ZeroParameter` for non-positive counts,
    :class:`NonMonotoneCapacity` when capacities decrease, and
    :class:`ValidationError` for length mismatches.
    """
    if spec.rounds < 1:
        raise ZeroParameter(f"rounds must be >= 1, got {spec.rounds}")
    if len(spec.messages_per_round) != spec.rounds:
        raise ValidationError(
            f"messages_per_round has {len(spec.messages_per_round)} entries "
            f"for {spec.rounds} rounds"
        )
    if len(spec.capacity_per_round) != spec.rounds:
        raise ValidationError(
            f"capacity_per_round has {len(spec.capacity_per_round)} entries "
            f"for {spec.rounds} rounds"
        )
    for m in spec.messages_per_round:
        if m < 1:
            raise ZeroParameter(f"messages per round must be >= 1, got {m}")
    for c in spec.capacity_per_round:
        if c < 1:
            raise ZeroParameter(f"capacity per round must be >= 1, got {c}")
    caps = spec.capacity_per_round
    for earlier, later in zip(caps, caps[1:]):
        if later < earlier:
            raise NonMonotoneCapacity(f"capacities must be non-decreasing, got {caps}")
    return spec


def validate_population(pop: PopulationSpec) -> PopulationSpec:
    """Check that *pop* has at least one bin and one ball."""
    if pop.bins < 1:
        raise ZeroParameter(f"bins must be >= 1, got {pop.bins}")
    if pop.balls < 1:
        raise ZeroParameter(f"balls must be >= 1, got {pop.balls}")
    return pop


@dataclass(frozen=True)
class LoadDistribution:
    """Fraction of bins at each load value; index = load."""

    fractions: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "fractions", tuple(float(f) for f in self.fractions))
        if not self.fractions:
            raise ValidationError("load distribution must have at least one entry")
        for f in self.fractions:
            if not (-0.0 <= f <= 1.0 + NORMALIZATION_TOL):
                raise ValidationError(f"load fraction out of [0, 1]: {f!r}")
        total = math.fsum(self.fractions)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValidationError(f"load fractions sum to {total!r}, not 1")

    @property
    def max_load(self) -> int:
        return len(self.fractions) - 1

    @property
    def mean_load(self) -> float:
        """Expected bin load, i.e. placed balls per bin."""
        return math.fsum(load * f for load, f in enumerate(self.fractions))

    def padded(self, max_load: int) -> "LoadDistribution":
        """Extend with zero-probability entries up to index *max_load*."""
        if max_load < self.max_load:
            raise CapacityRegression(
                f"cannot shrink distribution of max load {self.max_load} to {max_load}"
            )
        extra = (0.0,) * (max_load - self.max_load)
        return LoadDistribution(self.fractions + extra)


@dataclass(frozen=True)
class RoundState:
    """State entering a round: unplaced balls per bin plus the load profile."""

    remaining_fraction: float
    loads: LoadDistribution
    requests_so_far: float
    round_index: int

    def __post_init__(self) -> None:
        if self.remaining_fraction < 0.0:
            raise ValidationError(f"remaining fraction < 0: {self.remaining_fraction!r}")
        if self.requests_so_far < 0.0:
            raise ValidationError(f"requests so far < 0: {self.requests_so_far!r}")
        if self.round_index < 1:
            raise ValidationError(f"round index must be >= 1, got {self.round_index}")


def total_mass(state: RoundState) -> float:
    """Unplaced plus placed balls per bin; conserved across rounds."""
    return state.remaining_fraction + state.loads.mean_load


def initial_state(pop: PopulationSpec) -> RoundState:
    """State entering round 1: every ball unplaced, every bin empty."""
    validate_population(pop)
    return RoundState(
        remaining_fraction=pop.balls / pop.bins,
        loads=LoadDistribution((1.0,)),
        requests_so_far=0.0,
        round_index=1,
    )


@dataclass(frozen=True)
class RoundRecord:
    """What one analytic round did."""

    state_before: RoundState
    commit_probability: float
    rank_probabilities: tuple[float, ...] | None
    state_after: RoundState
    survivor_fraction: float


@dataclass(frozen=True)
class EstimateReport:
    """Result of folding the expectation engine over all rounds."""

    per_round: tuple[RoundRecord, ...]
    final_remaining_fraction: float
    final_remaining_expected: float
    failure_probability_bound: float | None
    total_messages_upper_bound: float
    requests_per_bin: float
    bins: int
    balls: int
    ranked: bool
    concentration_warning: bool

    @property
    def terminated(self) -> bool:
        """True when the run ends with fewer than one expected unplaced ball."""
        return self.failure_probability_bound is not None


@dataclass(frozen=True)
class SimRoundRecord:
    """Measured outcome of one simulated round."""

    balls_remaining: int
    load_histogram: tuple[int, ...]
    requests_sent: int
    responses_sent: int


@dataclass(frozen=True)
class SimOutcome:
    """Exact ledger of one simulated run."""

    per_round: tuple[SimRoundRecord, ...]
    commits_total: int
    messages_total: int

    @property
    def balls_remaining(self) -> int:
        return self.per_round[-1].balls_remaining

    @property
    def final_histogram(self) -> tuple[int, ...]:
        return self.per_round[-1].load_histogram
