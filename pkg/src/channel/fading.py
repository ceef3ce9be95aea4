"""Discrete fading distributions and joint fade-state tables."""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rayleigh

from src.exceptions import DimensionMismatchError, InvalidParameterError

logger = logging.getLogger(__name__)

PMF_TOLERANCE = 1e-12
JOINT_TOLERANCE = 1e-9


def _frozen(values: Sequence[float] | np.ndarray) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class MarginalFading:
    """Discrete distribution of one user's channel power gain.

    Attributes:
        support: Strictly increasing positive fade gains
        pmf: Probability of each support point
    """

    support: np.ndarray
    pmf: np.ndarray

    def __post_init__(self) -> None:
        """Freeze arrays and check the distribution."""
        support = _frozen(self.support)
        pmf = _frozen(self.pmf)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "pmf", pmf)

        if support.ndim != 1 or support.size == 0:
            raise InvalidParameterError("fading support must be a nonempty vector")
        if support.shape != pmf.shape:
            raise DimensionMismatchError("fading pmf", support.shape, pmf.shape)
        if np.any(support <= 0):
            raise InvalidParameterError("fade gains must be strictly positive")
        if np.any(np.diff(support) <= 0):
            raise InvalidParameterError("fading support must be strictly increasing")
        if np.any(pmf < 0):
            raise InvalidParameterError("fading pmf has negative entries")
        total = float(pmf.sum())
        if abs(total - 1.0) > PMF_TOLERANCE:
            raise InvalidParameterError("fading pmf must sum to 1", total=total)

    @property
    def size(self) -> int:
        """Number of support points."""
        return int(self.support.size)

    def mean(self) -> float:
        """Mean fade gain."""
        return float(np.dot(self.support, self.pmf))

    @classmethod
    def constant(cls, gain: float) -> "MarginalFading":
        """Degenerate distribution with all mass on one gain."""
        return cls(support=np.array([gain]), pmf=np.array([1.0]))


def quantize_rayleigh(scale: float, q: float, h_max: float) -> MarginalFading:
    """Quantize a Rayleigh law onto the grid {q, 2q, ..., floor(h_max/q) q}.

    Bin i collects the mass of ((i-1)q, iq]; the tail beyond the last grid
    point is folded into the last bin.

    Args:
        scale: Rayleigh scale parameter
        q: Quantization step
        h_max: Largest admissible gain

    Returns:
        Quantized marginal distribution
    """
    if scale <= 0:
        raise InvalidParameterError("Rayleigh scale must be positive", scale=scale)
    if q <= 0:
        raise InvalidParameterError("quantization step must be positive", q=q)
    if h_max < q:
        raise InvalidParameterError("h_max must be at least q", q=q, h_max=h_max)

    # 5 / 0.1 evaluates to 49.999...; the relative guard keeps the last point
    count = math.floor(h_max / q * (1.0 + 1e-12))
    support = q * np.arange(1, count + 1, dtype=float)
    edges = q * np.arange(0, count + 1, dtype=float)
    cdf = rayleigh.cdf(edges, scale=scale)
    pmf = np.diff(cdf)
    pmf[-1] = 1.0 - pmf[:-1].sum()

    logger.debug(
        "Quantized Rayleigh(scale=%s) with q=%s, h_max=%s into %d points",
        scale,
        q,
        h_max,
        count,
    )
    return MarginalFading(support=support, pmf=pmf)


@dataclass(frozen=True)
class JointFadeTable:
    """Enumerated joint fade states of all users.

    Attributes:
        states: Array (S, L) of fade gains, one row per joint state
        probs: Probability of each joint state
        marginals: The per-user distributions the table was built from
    """

    states: np.ndarray
    probs: np.ndarray
    marginals: tuple[MarginalFading, ...] = field(default=())

    def __post_init__(self) -> None:
        """Freeze arrays and check normalization."""
        states = _frozen(self.states)
        probs = _frozen(self.probs)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "marginals", tuple(self.marginals))

        if states.ndim != 2:
            raise DimensionMismatchError("joint states", "(S, L)", states.shape)
        if probs.shape != (states.shape[0],):
            raise DimensionMismatchError("joint probabilities", (states.shape[0],), probs.shape)
        total = float(probs.sum())
        if abs(total - 1.0) > JOINT_TOLERANCE:
            raise InvalidParameterError("joint probabilities must sum to 1", total=total)

    @property
    def num_users(self) -> int:
        """Number of users L."""
        return int(self.states.shape[1])

    @property
    def num_states(self) -> int:
        """Number of joint states S."""
        return int(self.states.shape[0])

    @property
    def grid_shape(self) -> tuple[int, ...]:
        """Support sizes per user, in enumeration order."""
        return tuple(m.size for m in self.marginals)

    def marginal(self, user: int) -> MarginalFading:
        """Recover a user's marginal by summing over the other coordinates."""
        if not self.marginals:
            raise InvalidParameterError("table was not built from marginals")
        probs = self.probs.reshape(self.grid_shape)
        axes = tuple(axis for axis in range(self.num_users) if axis != user)
        return MarginalFading(
            support=self.marginals[user].support, pmf=probs.sum(axis=axes)
        )

    def max_gains(self) -> np.ndarray:
        """Largest gain per user."""
        return self.states.max(axis=0)


def joint_states(marginals: Sequence[MarginalFading]) -> JointFadeTable:
    """Build the independent joint table as the Cartesian product of marginals.

    The first user's index varies slowest, so the enumeration is lexicographic.
    """
    if not marginals:
        raise InvalidParameterError("at least one marginal is required")

    gains = np.meshgrid(*(m.support for m in marginals), indexing="ij")
    weights = np.meshgrid(*(m.pmf for m in marginals), indexing="ij")
    states = np.stack([g.ravel() for g in gains], axis=1)
    probs = np.prod(np.stack([w.ravel() for w in weights], axis=1), axis=1)

    return JointFadeTable(states=states, probs=probs, marginals=tuple(marginals))


def expect(
    table: JointFadeTable, f: Callable[[np.ndarray], float] | np.ndarray
) -> float:
    """Expectation of a per-state quantity over the joint table.

    Args:
        table: Joint fade table
        f: Function of one fade vector, or precomputed per-state values

    Returns:
        Sum over states of probability times value
    """
    if callable(f):
        values = np.array([f(state) for state in table.states], dtype=float)
    else:
        values = np.asarray(f, dtype=float)
        if values.shape != table.probs.shape:
            raise DimensionMismatchError("per-state values", table.probs.shape, values.shape)
    return float(np.dot(table.probs, values))
