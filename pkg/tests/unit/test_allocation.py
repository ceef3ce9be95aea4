"""Unit tests for greedy rate allocation on the shifted polymatroid."""

import numpy as np
import pytest

from src.channel.region import ReceiverModel, subset_capacities
from src.solver.allocation import (
    enumerate_best_rates,
    feasible,
    greedy_rates,
    monotone_closure,
    reward_order,
    shifted_rank,
)


class TestGreedyRates:
    """Test cases for greedy_rates."""

    @pytest.fixture
    def pentagon(self):
        """c({0}) = 1, c({1}) = 0.8, c({0, 1}) = 1.5."""
        return np.array([1.0, 0.8, 1.5])

    def test_first_user_decoded_last(self, pentagon):
        """The larger reward takes its single-user capacity."""
        rates = greedy_rates(pentagon, np.zeros(2), np.array([0.7, 0.3]))
        np.testing.assert_allclose(rates, [1.0, 0.5])

    def test_second_user_decoded_last(self, pentagon):
        """Reversing the rewards reverses the corner."""
        rates = greedy_rates(pentagon, np.zeros(2), np.array([0.3, 0.7]))
        np.testing.assert_allclose(rates, [0.7, 0.8])

    def test_minimum_rates_reserved(self):
        """A non-monotone shifted rank is closed before the greedy pass."""
        capacities = np.array([1.0, 0.3, 1.2])
        rho = np.array([0.0, 0.25])
        rates = greedy_rates(capacities, rho, np.array([0.7, 0.3]))
        np.testing.assert_allclose(rates, [0.95, 0.25])

    def test_vectorized(self, pentagon):
        """Leading axes are carried through."""
        stacked = np.stack([pentagon, 2 * pentagon])
        rates = greedy_rates(stacked, np.zeros(2), np.array([0.7, 0.3]))
        assert rates.shape == (2, 2)
        np.testing.assert_allclose(rates[1], [2.0, 1.0])

    def test_matches_exhaustive_enumeration(self):
        """Greedy and vertex enumeration reach the same objective on random states."""
        rng = np.random.default_rng(11)
        for _ in range(200):
            gains = rng.uniform(0.1, 3.0, size=3)
            powers = rng.uniform(0.0, 2.0, size=3)
            mu = rng.dirichlet(np.ones(3))
            caps = subset_capacities(gains, powers, 1.0, ReceiverModel.IDEAL, 0.0)
            rho = 0.3 * rng.uniform(size=3) * caps[[0, 1, 3]]
            if not feasible(caps, rho):
                continue
            greedy = greedy_rates(caps, rho, mu)
            _, best = enumerate_best_rates(caps, rho, mu)
            assert greedy @ mu == pytest.approx(float(best), abs=1e-9)


class TestPolymatroidHelpers:
    """Test cases for the rank helpers."""

    def test_shifted_rank(self):
        """g(A) = c(A) - rho(A)."""
        rank = shifted_rank(np.array([1.0, 2.0, 2.5]), np.array([0.5, 0.25]))
        np.testing.assert_allclose(rank, [0.5, 1.75, 1.75])

    def test_feasible(self):
        """rho must fit under every subset capacity."""
        assert feasible(np.array([1.0, 1.0, 1.5]), np.array([0.5, 0.5]))
        assert not feasible(np.array([1.0, 1.0, 0.8]), np.array([0.5, 0.5]))

    def test_monotone_closure(self):
        """Closure takes the superset minimum and clips at zero."""
        closure = monotone_closure(np.array([1.0, 0.05, 0.95]))
        np.testing.assert_allclose(closure, [0.95, 0.05, 0.95])
        clipped = monotone_closure(np.array([-0.5, 0.2, 0.1]))
        np.testing.assert_allclose(clipped, [0.0, 0.1, 0.1])

    def test_reward_order_is_stable(self):
        """Ties keep index order."""
        np.testing.assert_array_equal(reward_order(np.array([0.2, 0.5, 0.5])), [1, 2, 0])


class TestEnumeration:
    """Test cases for enumerate_best_rates."""

    def test_infeasible_state(self):
        """No candidate survives when rho exceeds the capacities."""
        _, value = enumerate_best_rates(
            np.array([0.1, 0.1, 0.15]), np.array([0.5, 0.5]), np.array([0.5, 0.5])
        )
        assert value == -np.inf
