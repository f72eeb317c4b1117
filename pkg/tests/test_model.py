"""Domain-type validation and structural invariants."""
import math

import pytest

from binload.model import (
    AlgorithmSpec,
    CapacityRegression,
    LoadDistribution,
    NonMonotoneCapacity,
    PopulationSpec,
    RoundState,
    ValidationError,
    ZeroParameter,
    initial_state,
    total_mass,
    validate_population,
    validate_spec,
)


class TestValidateSpec:
    def test_reference_three_round_spec_is_valid(self):
        spec = AlgorithmSpec(
            rounds=3, messages_per_round=(2, 5, 5), capacity_per_round=(2, 2, 2),
            ranked=True,
        )
        assert validate_spec(spec) is spec

    def test_minimal_spec_is_valid(self):
        spec = AlgorithmSpec(rounds=1, messages_per_round=(1,), capacity_per_round=(1,))
        assert validate_spec(spec) is spec

    def test_decreasing_capacity_rejected(self):
        spec = AlgorithmSpec(rounds=2, messages_per_round=(1, 1), capacity_per_round=(3, 2))
        with pytest.raises(NonMonotoneCapacity):
            validate_spec(spec)

    def test_equal_capacities_allowed(self):
        spec = AlgorithmSpec(rounds=2, messages_per_round=(2, 2), capacity_per_round=(2, 2))
        validate_spec(spec)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(rounds=0, messages_per_round=(), capacity_per_round=()),
            dict(rounds=1, messages_per_round=(0,), capacity_per_round=(1,)),
            dict(rounds=1, messages_per_round=(1,), capacity_per_round=(0,)),
        ],
    )
    def test_zero_parameters_rejected(self, kwargs):
        with pytest.raises(ZeroParameter):
            validate_spec(AlgorithmSpec(**kwargs))

    def test_length_mismatch_rejected(self):
        spec = AlgorithmSpec(rounds=2, messages_per_round=(1,), capacity_per_round=(1, 1))
        with pytest.raises(ValidationError):
            validate_spec(spec)
        spec = AlgorithmSpec(rounds=1, messages_per_round=(1,), capacity_per_round=(1, 2))
        with pytest.raises(ValidationError):
            validate_spec(spec)


class TestPopulation:
    def test_equal_balls_and_bins(self):
        state = initial_state(PopulationSpec(bins=10**6, balls=10**6))
        assert state.remaining_fraction == 1.0
        assert state.loads.fractions == (1.0,)
        assert state.requests_so_far == 0.0
        assert state.round_index == 1

    def test_more_balls_than_bins(self):
        state = initial_state(PopulationSpec(bins=10**6, balls=2 * 10**6))
        assert state.remaining_fraction == 2.0

    def test_zero_balls_rejected(self):
        with pytest.raises(ZeroParameter):
            initial_state(PopulationSpec(bins=10, balls=0))

    def test_zero_bins_rejected(self):
        with pytest.raises(ZeroParameter):
            validate_population(PopulationSpec(bins=0, balls=10))


class TestLoadDistribution:
    def test_normalization_enforced(self):
        with pytest.raises(ValidationError):
            LoadDistribution((0.5, 0.4))

    def test_negative_fraction_rejected(self):
        with pytest.raises(ValidationError):
            LoadDistribution((1.5, -0.5))

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            LoadDistribution(())

    def test_mean_and_max_load(self):
        dist = LoadDistribution((0.25, 0.5, 0.25))
        assert dist.max_load == 2
        assert math.isclose(dist.mean_load, 1.0, rel_tol=0, abs_tol=1e-15)

    def test_padding_appends_zeros(self):
        dist = LoadDistribution((0.5, 0.5)).padded(3)
        assert dist.fractions == (0.5, 0.5, 0.0, 0.0)

    def test_padding_cannot_shrink(self):
        with pytest.raises(CapacityRegression):
            LoadDistribution((0.5, 0.25, 0.25)).padded(1)


class TestRoundState:
    def test_mass_accounting(self):
        state = RoundState(
            remaining_fraction=0.1,
            loads=LoadDistribution((0.3, 0.5, 0.2)),
            requests_so_far=2.0,
            round_index=2,
        )
        assert math.isclose(total_mass(state), 1.0, rel_tol=0, abs_tol=1e-15)

    def test_negative_remaining_rejected(self):
        with pytest.raises(ValidationError):
            RoundState(
                remaining_fraction=-0.1,
                loads=LoadDistribution((1.0,)),
                requests_so_far=0.0,
                round_index=1,
            )
