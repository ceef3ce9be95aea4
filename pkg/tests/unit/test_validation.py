"""Unit tests for the oracle and property checks."""

import time
from dataclasses import replace

import numpy as np
import pytest

from src.channel.region import RateVector, ReceiverModel
from src.reports.validation import (
    REGION_TOLERANCE,
    CheckResult,
    ValidationReport,
    check_dominance,
    check_ergodic_water_filling,
    check_infeasible_energy,
    check_oracle,
    check_submodularity,
    check_water_filling,
    random_instance,
    support_violation,
    touching_tolerance,
)
from src.solver.optimizer import BoundaryPoint, RewardVector, dual_solve, per_state_solve


@pytest.fixture
def rng():
    """Seeded generator."""
    return np.random.default_rng(2024)


def fake_point(mu, rates):
    """Boundary point carrying only rewards and rates."""
    return BoundaryPoint(
        mu=RewardVector(np.array(mu, dtype=float)),
        avg_rates=RateVector(np.array(rates, dtype=float)),
        policy=None,
        multipliers=None,
        pi_e=0.0,
        delivered=0.0,
    )


class TestReport:
    """Test cases for ValidationReport."""

    def test_passed(self):
        """A report passes only if every check does."""
        report = ValidationReport()
        report.add(CheckResult("a", True))
        assert report.passed
        report.add(CheckResult("b", False, 1.0, "broken"))
        assert not report.passed


class TestRandomInstance:
    """Test cases for random per-state instances."""

    def test_instances_are_solvable(self, rng):
        """Minimum rates are reachable on the coarse grid."""
        for _ in range(30):
            case = random_instance(rng, int(rng.integers(1, 3)))
            per_state_solve(**case)


class TestChecks:
    """Test cases for the individual checks."""

    def test_oracle(self, rng):
        """Grid search agrees with exhaustive enumeration."""
        results = check_oracle(rng, 25)
        assert [r.name for r in results] == ["oracle, equal grids", "oracle, refined grid"]
        assert all(r.passed for r in results)

    @pytest.mark.slow
    def test_oracle_thousand_instances(self):
        """The full randomized comparison passes on the default seed within a minute."""
        start = time.perf_counter()
        results = check_oracle(np.random.default_rng(0), 1000)
        elapsed = time.perf_counter() - start
        for result in results:
            assert result.passed, (result.name, result.residual)
        assert elapsed < 60.0

    def test_water_filling(self, rng):
        """Single-user grid optimum tracks water-filling."""
        assert check_water_filling(rng, 50).passed

    def test_dominance(self, rng):
        """Ideal >= PS >= TS per state."""
        assert check_dominance(rng, 200).passed

    def test_submodularity(self, rng):
        """Capacities are submodular."""
        assert check_submodularity(rng, 100).passed

    def test_ergodic_water_filling(self):
        """Boundary solve matches the closed form."""
        result = check_ergodic_water_filling()
        assert result.passed, result.residual

    def test_infeasible_energy(self):
        """Excessive deficits are rejected."""
        assert check_infeasible_energy().passed


class TestSupportViolation:
    """Test cases for the region containment measure."""

    def test_contained(self):
        """Points inside give a nonpositive violation."""
        outer = [fake_point([0.5, 0.5], [1.0, 1.0])]
        inner = [fake_point([0.5, 0.5], [0.5, 0.8])]
        assert support_violation(inner, outer) <= 0.0

    def test_escaping(self):
        """A point beyond the supporting line is measured."""
        outer = [fake_point([1.0, 0.0], [1.0, 0.2])]
        inner = [fake_point([1.0, 0.0], [1.3, 0.0])]
        assert support_violation(inner, outer) == pytest.approx(0.3)

    def test_empty(self):
        """No points, no violation."""
        assert support_violation([], []) == 0.0

    def test_time_switching_inside_power_splitting(self, tiny_scenario, solver_options):
        """Solved TS points stay below the PS boundary."""
        ps = [dual_solve(tiny_scenario, RewardVector.uniform(2), solver_options)]
        ts_scenario = tiny_scenario.with_model(ReceiverModel.TIME_SWITCHING)
        ts = [dual_solve(ts_scenario, RewardVector.uniform(2), solver_options)]
        assert support_violation(ts, ps) <= REGION_TOLERANCE


class TestTolerances:
    """Test cases for region tolerances."""

    def test_touching_tolerance_tracks_power_balance(self, solver_options):
        """Regions that may touch get the rate slack of the power tolerance."""
        assert REGION_TOLERANCE == 1e-6
        expected = REGION_TOLERANCE + solver_options.power_rtol / (2.0 * np.log(2.0))
        assert touching_tolerance(solver_options) == pytest.approx(expected)
        tighter = replace(solver_options, power_rtol=1e-8)
        assert touching_tolerance(tighter) < 2e-6
