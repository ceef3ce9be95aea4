"""Closed-form single-user water-filling, used to cross-check the grid solver."""

import numpy as np
from scipy.optimize import brentq

from src.channel.fading import MarginalFading
from src.exceptions import InvalidParameterError

LN2 = float(np.log(2.0))


def water_filling_power(gain: float, price: float, sigma2: float) -> float:
    """Maximizer of 0.5 log2(1 + g t / sigma2) - price * t over t >= 0."""
    if price <= 0:
        raise InvalidParameterError("power price must be positive", price=price)
    return max(1.0 / (2.0 * price * LN2) - sigma2 / gain, 0.0)


def water_filling_rate(gain: float, power: float, sigma2: float) -> float:
    """Single-user AWGN rate 0.5 log2(1 + g t / sigma2)."""
    return 0.5 * float(np.log1p(gain * power / sigma2)) / LN2


def ergodic_water_filling(
    fading: MarginalFading, mean_power: float, sigma2: float
) -> tuple[float, float]:
    """Optimal average rate of a fading channel under an average power limit.

    Powers follow t(h) = (w - sigma2/h)^+; the water level w is found so the
    average power equals ``mean_power``.

    Returns:
        Tuple of (water level, average rate in bits per channel use)
    """
    if mean_power <= 0:
        return 0.0, 0.0
    floors = sigma2 / fading.support

    def excess(level: float) -> float:
        return float(np.dot(fading.pmf, np.maximum(level - floors, 0.0))) - mean_power

    upper = floors.max() + mean_power / fading.pmf.max() + 1.0
    level = brentq(excess, 0.0, upper, xtol=1e-15, rtol=1e-14)
    powers = np.maximum(level - floors, 0.0)
    rates = 0.5 * np.log1p(fading.support * powers / sigma2) / LN2
    return level, float(np.dot(fading.pmf, rates))
