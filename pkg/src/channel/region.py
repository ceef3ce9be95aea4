"""Rate bounds, region membership and receiver energy bookkeeping."""

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from itertools import combinations

import numpy as np

from src.channel.fading import JointFadeTable
from src.exceptions import (
    DimensionMismatchError,
    InfeasibleEnergyError,
    InvalidParameterError,
)

logger = logging.getLogger(__name__)

MAX_USERS = 16
RATE_TOLERANCE = 1e-9

Subset = frozenset[int]


class ReceiverModel(Enum):
    """Receiver architecture."""

    IDEAL = "ideal"
    TIME_SWITCHING = "ts"
    POWER_SPLITTING = "ps"

    @property
    def label(self) -> str:
        """Human readable name."""
        return {
            ReceiverModel.IDEAL: "Ideal",
            ReceiverModel.TIME_SWITCHING: "Time switching",
            ReceiverModel.POWER_SPLITTING: "Power splitting",
        }[self]


@dataclass(frozen=True)
class ReceiverEnergetics:
    """Receiver energy budget, all in J/slot."""

    mean_harvest_rx: float
    mean_consumption_rx: float
    eta: float

    def __post_init__(self) -> None:
        """Check ranges."""
        if self.mean_harvest_rx < 0 or self.mean_consumption_rx < 0:
            raise InvalidParameterError(
                "receiver harvest and consumption must be nonnegative",
                mean_harvest_rx=self.mean_harvest_rx,
                mean_consumption_rx=self.mean_consumption_rx,
            )
        if not 0 < self.eta <= 1:
            raise InvalidParameterError("eta must lie in (0, 1]", eta=self.eta)


@dataclass(frozen=True)
class RateVector:
    """Per-user rates in bits per channel use."""

    rates: np.ndarray

    def __post_init__(self) -> None:
        """Freeze and check nonnegativity."""
        rates = np.array(self.rates, dtype=float)
        rates.setflags(write=False)
        object.__setattr__(self, "rates", rates)
        if rates.ndim != 1:
            raise DimensionMismatchError("rate vector", "(L,)", rates.shape)
        if np.any(rates < 0):
            raise InvalidParameterError("rates must be nonnegative", rates=rates.tolist())

    @classmethod
    def zeros(cls, num_users: int) -> "RateVector":
        """All-zero rate vector."""
        return cls(np.zeros(num_users))

    def __len__(self) -> int:
        return int(self.rates.size)

    def subset_sum(self, subset: Subset) -> float:
        """Sum of the rates of the users in ``subset``."""
        return float(sum(self.rates[i] for i in subset))


@dataclass(frozen=True)
class PolicyTable:
    """Transmit energy per joint fade state and user.

    Attributes:
        powers: Array (S, L) of J/slot
        rates: Optional array (S, L) of the rate each user gets in a slot
            where the receiver decodes, as chosen by the optimizer
    """

    powers: np.ndarray
    rates: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        """Freeze arrays and check shapes."""
        powers = np.array(self.powers, dtype=float)
        powers.setflags(write=False)
        object.__setattr__(self, "powers", powers)
        if powers.ndim != 2:
            raise DimensionMismatchError("policy powers", "(S, L)", powers.shape)
        if np.any(powers < 0):
            raise InvalidParameterError("policy powers must be nonnegative")
        if self.rates is not None:
            rates = np.array(self.rates, dtype=float)
            rates.setflags(write=False)
            object.__setattr__(self, "rates", rates)
            if rates.shape != powers.shape:
                raise DimensionMismatchError("policy rates", powers.shape, rates.shape)

    @classmethod
    def constant(cls, table: JointFadeTable, powers: Sequence[float]) -> "PolicyTable":
        """Policy spending the same energy in every state."""
        return cls(np.tile(np.asarray(powers, dtype=float), (table.num_states, 1)))

    def check_table(self, table: JointFadeTable) -> None:
        """Raise if the policy does not match the joint table."""
        expected = (table.num_states, table.num_users)
        if self.powers.shape != expected:
            raise DimensionMismatchError("policy table", expected, self.powers.shape)

    def average_powers(self, table: JointFadeTable) -> np.ndarray:
        """Per-user average transmit energy E[T_i(H)]."""
        self.check_table(table)
        return table.probs @ self.powers


@lru_cache(maxsize=MAX_USERS)
def subset_masks(num_users: int) -> np.ndarray:
    """Membership matrix (2^L - 1, L) of all nonempty subsets, by bitmask."""
    if not 1 <= num_users <= MAX_USERS:
        raise InvalidParameterError(
            f"number of users must lie in [1, {MAX_USERS}]", num_users=num_users
        )
    codes = np.arange(1, 2**num_users)
    masks = (codes[:, None] >> np.arange(num_users)[None, :]) & 1
    masks = masks.astype(bool)
    masks.setflags(write=False)
    return masks


def nonempty_subsets(num_users: int) -> list[Subset]:
    """All nonempty subsets of users, ordered by bitmask."""
    return [frozenset(np.flatnonzero(row).tolist()) for row in subset_masks(num_users)]


def subset_index(subset: Subset) -> int:
    """Row of ``subset`` in :func:`subset_masks`."""
    return sum(1 << i for i in subset) - 1


def deficit(energetics: ReceiverEnergetics) -> float:
    """Average receiver energy deficit (E[T_r] - E[Y_r])^+."""
    return max(energetics.mean_consumption_rx - energetics.mean_harvest_rx, 0.0)


def delivered_rf_power(policy: PolicyTable, table: JointFadeTable, eta: float) -> float:
    """Mean harvested RF energy eta * sum_i E[H(i) T_i(H)]."""
    policy.check_table(table)
    return float(eta * np.sum(table.probs @ (table.states * policy.powers)))


def erasure_fraction(deficit: float, delivered: float, strict: bool = False) -> float:
    """Fraction of slots (or of received power) the receiver must harvest.

    Args:
        deficit: Receiver deficit (J/slot)
        delivered: Mean delivered RF energy (J/slot)
        strict: Raise instead of clamping when delivery cannot cover the deficit

    Returns:
        min(deficit / delivered, 1), or 0 without deficit
    """
    if deficit <= 0:
        return 0.0
    if delivered <= 0:
        raise InfeasibleEnergyError(deficit, delivered)
    ratio = deficit / delivered
    if strict and ratio > 1.0 + RATE_TOLERANCE:
        raise InfeasibleEnergyError(deficit, delivered)
    return min(ratio, 1.0)


def _check_model_inputs(sigma2: float, pi_e: float) -> None:
    if sigma2 <= 0:
        raise InvalidParameterError("noise variance must be positive", sigma2=sigma2)
    if not 0.0 <= pi_e <= 1.0:
        raise InvalidParameterError("erasure fraction must lie in [0, 1]", pi_e=pi_e)


def capacity_from_snr(snr: np.ndarray | float, model: ReceiverModel, pi_e: float) -> np.ndarray:
    """Map summed SNR values to subset capacities in bits per channel use."""
    snr = np.asarray(snr, dtype=float)
    if model is ReceiverModel.POWER_SPLITTING:
        return 0.5 * np.log1p((1.0 - pi_e) * snr) / np.log(2.0)
    value = 0.5 * np.log1p(snr) / np.log(2.0)
    if model is ReceiverModel.TIME_SWITCHING:
        return (1.0 - pi_e) * value
    return value


def subset_capacities(
    gains: np.ndarray,
    powers: np.ndarray,
    sigma2: float,
    model: ReceiverModel,
    pi_e: float,
) -> np.ndarray:
    """Capacities of every nonempty subset, vectorized over leading axes.

    Args:
        gains: Fade gains broadcastable against ``powers`` (..., L)
        powers: Transmit energies (..., L)
        sigma2: Noise variance (J/slot)
        model: Receiver model
        pi_e: Erasure fraction

    Returns:
        Array (..., 2^L - 1) ordered as :func:`subset_masks`
    """
    _check_model_inputs(sigma2, pi_e)
    snr = np.asarray(gains, dtype=float) * np.asarray(powers, dtype=float) / sigma2
    masks = subset_masks(snr.shape[-1])
    return capacity_from_snr(snr @ masks.T.astype(float), model, pi_e)


def state_capacity(
    subset: Subset,
    gains: Sequence[float] | np.ndarray,
    powers: Sequence[float] | np.ndarray,
    sigma2: float,
    model: ReceiverModel,
    pi_e: float = 0.0,
) -> float:
    """Sum-rate bound of ``subset`` in one fade state."""
    if not subset:
        raise InvalidParameterError("subset must be nonempty")
    _check_model_inputs(sigma2, pi_e)
    h = np.asarray(gains, dtype=float)
    t = np.asarray(powers, dtype=float)
    if h.shape != t.shape:
        raise DimensionMismatchError("fade and power vectors", h.shape, t.shape)
    members = sorted(subset)
    snr = float(np.sum(h[members] * t[members])) / sigma2
    return float(capacity_from_snr(snr, model, pi_e))


def ergodic_bounds(
    policy: PolicyTable,
    table: JointFadeTable,
    sigma2: float,
    model: ReceiverModel,
    pi_e: float = 0.0,
) -> dict[Subset, float]:
    """Expected subset capacities E_H[C_A(H)] for every nonempty subset."""
    policy.check_table(table)
    per_state = subset_capacities(table.states, policy.powers, sigma2, model, pi_e)
    averages = table.probs @ per_state
    return dict(zip(nonempty_subsets(table.num_users), averages.tolist()))


def region_contains(
    rates: RateVector,
    bounds: Mapping[Subset, float],
    rho: RateVector,
    tol: float = RATE_TOLERANCE,
) -> bool:
    """Whether rho(A) <= R(A) <= bound(A) holds for every nonempty subset."""
    if len(rates) != len(rho):
        raise DimensionMismatchError("rate vectors", len(rho), len(rates))
    for subset, bound in bounds.items():
        total = rates.subset_sum(subset)
        if total < rho.subset_sum(subset) - tol or total > bound + tol:
            return False
    return True


def feasible_min_rates(
    gains: Sequence[float] | np.ndarray,
    powers: Sequence[float] | np.ndarray,
    rho: RateVector,
    sigma2: float,
    model: ReceiverModel,
    pi_e: float = 0.0,
    tol: float = RATE_TOLERANCE,
) -> bool:
    """Whether the per-state rate polytope contains a point above rho."""
    h = np.asarray(gains, dtype=float)
    t = np.asarray(powers, dtype=float)
    if h.shape != t.shape or h.shape != rho.rates.shape:
        raise DimensionMismatchError("fade, power and rate vectors", h.shape, t.shape)
    caps = subset_capacities(h, t, sigma2, model, pi_e)
    needs = subset_masks(h.size).astype(float) @ rho.rates
    return bool(np.all(needs <= caps + tol))


def is_submodular(values: Mapping[Subset, float], tol: float = RATE_TOLERANCE) -> bool:
    """Check f(A | B) + f(A & B) <= f(A) + f(B) over all subset pairs."""

    def f(subset: Subset) -> float:
        return values[subset] if subset else 0.0

    for a, b in combinations(list(values), 2):
        if f(a | b) + f(a & b) > f(a) + f(b) + tol:
            return False
    return True
