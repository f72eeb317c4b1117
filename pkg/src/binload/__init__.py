"""Estimates and simulation for multi-round randomized ball placement.

The package covers a family of synchronous placement protocols in which every
unplaced ball sends a number of requests to uniformly random bins, bins answer
requests up to a per-round capacity, and answered balls commit.  Requests may
be indistinguishable ("unranked") or carry a preference order ("ranked").

Public surface:

* :mod:`binload.model` -- shared configuration/result types and validation.
* :mod:`binload.analytic` -- iterative expectation engine (no randomness).
* :mod:`binload.sim` -- faithful Monte Carlo simulator of the same protocols.
* :mod:`binload.baselines` -- reference algorithms used for comparison runs.
* :mod:`binload.cli` -- ``binload`` command line front end.
"""
from __future__ import annotations

from binload.model import (
    AlgorithmSpec,
    CapacityRegression,
    EstimateReport,
    InvariantViolation,
    LoadDistribution,
    NonMonotoneCapacity,
    PopulationSpec,
    RoundRecord,
    RoundState,
    SimOutcome,
    SimRoundRecord,
    ValidationError,
    ZeroParameter,
    initial_state,
    validate_population,
    validate_spec,
)
from binload.analytic import (
    PoissonTruncation,
    advance_round,
    choose_prob_unranked,
    commit_prob_ranked,
    commit_prob_unranked,
    load_update_ranked,
    load_update_unranked,
    poisson_weight,
    rank_response_prob,
    run_estimate,
    single_nonresponse_prob,
    single_response_prob,
)
from binload.sim import SimStats, TrialConfig, simulate_many, simulate_run

__version__ = "0.1.0"

__all__ = [
    "AlgorithmSpec",
    "CapacityRegression",
    "EstimateReport",
    "InvariantViolation",
    "LoadDistribution",
    "NonMonotoneCapacity",
    "PoissonTruncation",
    "PopulationSpec",
    "RoundRecord",
    "RoundState",
    "SimOutcome",
    "SimRoundRecord",
    "SimStats",
    "TrialConfig",
    "ValidationError",
    "ZeroParameter",
    "advance_round",
    "choose_prob_unranked",
    "commit_prob_ranked",
    "commit_prob_unranked",
    "initial_state",
    "load_update_ranked",
    "load_update_unranked",
    "poisson_weight",
    "rank_response_prob",
    "run_estimate",
    "simulate_many",
    "simulate_run",
    "single_nonresponse_prob",
    "single_response_prob",
    "validate_population",
    "validate_spec",
]
