"""Unit tests for energy arrival processes and the slot stream."""

import numpy as np
import pytest

from src.exceptions import InvalidParameterError
from src.simulation.harvest import HarvestKind, HarvestProcess, SlotStream


class TestHarvestProcess:
    """Test cases for HarvestProcess."""

    @pytest.fixture
    def rng(self):
        """Seeded generator."""
        return np.random.default_rng(42)

    def test_constant(self, rng):
        """Constant arrivals equal the mean."""
        draws = HarvestProcess(HarvestKind.CONSTANT, 2.5).sample(rng, 10)
        np.testing.assert_array_equal(draws, np.full(10, 2.5))

    @pytest.mark.parametrize("kind", [HarvestKind.EXPONENTIAL, HarvestKind.UNIFORM, HarvestKind.TWO_POINT])
    def test_mean(self, rng, kind):
        """Sample means match the configured mean."""
        draws = HarvestProcess(kind, 3.0).sample(rng, 200_000)
        assert draws.mean() == pytest.approx(3.0, rel=0.02)
        assert np.all(draws >= 0)

    def test_two_point_values(self, rng):
        """Two-point arrivals are 0 or twice the mean."""
        draws = HarvestProcess(HarvestKind.TWO_POINT, 1.5).sample(rng, 1000)
        assert set(np.unique(draws).tolist()) <= {0.0, 3.0}

    def test_zero_mean(self, rng):
        """A zero mean yields zeros for every kind."""
        draws = HarvestProcess(HarvestKind.EXPONENTIAL, 0.0).sample(rng, 5)
        np.testing.assert_array_equal(draws, np.zeros(5))

    def test_kind_from_string(self):
        """Kinds may be given by value."""
        assert HarvestProcess("two-point", 1.0).kind is HarvestKind.TWO_POINT

    def test_negative_mean(self):
        """Means are nonnegative."""
        with pytest.raises(InvalidParameterError):
            HarvestProcess(HarvestKind.CONSTANT, -1.0)


class TestSlotStream:
    """Test cases for SlotStream."""

    @staticmethod
    def make_stream(seed: int = 9) -> SlotStream:
        """Two transmitters, four joint states, small chunks."""
        return SlotStream(
            seed,
            [HarvestProcess(HarvestKind.EXPONENTIAL, 1.0), HarvestProcess(HarvestKind.UNIFORM, 2.0)],
            HarvestProcess(HarvestKind.EXPONENTIAL, 0.5),
            HarvestProcess(HarvestKind.CONSTANT, 0.1),
            np.array([0.1, 0.2, 0.3, 0.4]),
            chunk=100,
        )

    @staticmethod
    def collect(stream: SlotStream, horizon: int) -> dict[str, np.ndarray]:
        """Concatenate every chunk."""
        chunks = list(stream.chunks(horizon))
        return {key: np.concatenate([c[key] for c in chunks]) for key in chunks[0]}

    def test_length(self):
        """Exactly ``horizon`` slots are produced."""
        draws = self.collect(self.make_stream(), 250)
        assert draws["state"].shape == (250,)
        assert draws["tx"].shape == (250, 2)
        assert draws["symbols"].shape == (250, 2)

    def test_prefix_independent_of_horizon(self):
        """The first slots do not depend on the horizon."""
        short = self.collect(self.make_stream(), 130)
        long = self.collect(self.make_stream(), 420)
        for key, values in short.items():
            np.testing.assert_array_equal(values, long[key][:130])

    def test_seed_changes_draws(self):
        """Different seeds give different streams."""
        a = self.collect(self.make_stream(1), 100)
        b = self.collect(self.make_stream(2), 100)
        assert not np.array_equal(a["tx"], b["tx"])

    def test_state_frequencies(self):
        """States follow the joint probabilities."""
        states = self.collect(self.make_stream(), 40_000)["state"]
        frequencies = np.bincount(states, minlength=4) / states.size
        np.testing.assert_allclose(frequencies, [0.1, 0.2, 0.3, 0.4], atol=0.015)
