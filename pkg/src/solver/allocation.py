"""Rate allocation on the per-state multiple-access polytope.

For capacities c(A) and minimum rates rho, the feasible rates of one fade
state are {r : r >= rho, r(A) <= c(A) for all A}. Shifting by rho gives a
polymatroid with the submodular (not necessarily monotone) function
g(A) = c(A) - rho(A). A linear objective with nonnegative weights is
maximized greedily on its monotone closure g'(A) = min over supersets B of g(B),
taking users in order of decreasing weight.

Everything here is vectorized over leading axes; the last axis indexes the
nonempty subsets in bitmask order (see :func:`src.channel.region.subset_masks`).
"""

from functools import lru_cache
from itertools import permutations

import numpy as np

from src.channel.region import subset_masks

FEASIBILITY_TOLERANCE = 1e-12


@lru_cache(maxsize=16)
def _superset_indices(num_users: int) -> tuple[np.ndarray, ...]:
    codes = np.arange(1, 2**num_users)
    return tuple(np.flatnonzero((codes & code) == code) for code in codes)


def shifted_rank(capacities: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """g(A) = c(A) - rho(A) for every nonempty subset."""
    masks = subset_masks(rho.size).astype(float)
    return capacities - masks @ rho


def feasible(capacities: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Whether rho(A) <= c(A) holds for every subset."""
    return np.all(shifted_rank(capacities, rho) >= -FEASIBILITY_TOLERANCE, axis=-1)


def monotone_closure(rank: np.ndarray) -> np.ndarray:
    """Monotone closure: min of g over the supersets of A, clipped at zero."""
    num_users = int(np.log2(rank.shape[-1] + 1))
    closure = np.empty_like(rank)
    for index, supersets in enumerate(_superset_indices(num_users)):
        closure[..., index] = rank[..., supersets].min(axis=-1)
    return np.maximum(closure, 0.0)


def reward_order(mu: np.ndarray) -> np.ndarray:
    """Users by decreasing reward; ties keep index order."""
    return np.argsort(-np.asarray(mu, dtype=float), kind="stable")


def greedy_rates(capacities: np.ndarray, rho: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Maximizer of mu . r over the feasible rate polytope.

    The user with the largest reward is decoded last and receives the
    interference-free increment; minimum rates are reserved for everyone.

    Args:
        capacities: Subset capacities (..., 2^L - 1)
        rho: Minimum rates (L,)
        mu: Rate rewards (L,)

    Returns:
        Rates (..., L). Meaningful only where :func:`feasible` holds.
    """
    closure = monotone_closure(shifted_rank(capacities, rho))
    rates = np.empty(capacities.shape[:-1] + (rho.size,))
    previous = np.zeros(capacities.shape[:-1])
    code = 0
    for user in reward_order(mu):
        code |= 1 << int(user)
        current = closure[..., code - 1]
        rates[..., user] = rho[user] + current - previous
        previous = current
    return rates


def vertex_candidates(capacities: np.ndarray, rho: np.ndarray) -> list[np.ndarray]:
    """All successive-decoding vertices with minimum-rate clamping patterns.

    For every decoding order and every set of users held at their minimum
    rate, users are filled in turn with the largest increment that keeps every
    subset constraint satisfied. This is a brute-force enumeration independent
    of :func:`greedy_rates`.
    """
    num_users = rho.size
    masks = subset_masks(num_users)
    rank = shifted_rank(capacities, rho)
    candidates = []
    for order in permutations(range(num_users)):
        for pattern in range(2**num_users):
            increments = np.zeros(capacities.shape[:-1] + (num_users,))
            for user in order:
                if pattern >> user & 1:
                    continue
                containing = masks[:, user]
                used = increments @ masks[containing].T.astype(float)
                slack = rank[..., containing] - used
                increments[..., user] = np.maximum(slack.min(axis=-1), 0.0)
            candidates.append(rho + increments)
    return candidates


def enumerate_best_rates(
    capacities: np.ndarray, rho: np.ndarray, mu: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Best feasible vertex by exhaustive enumeration.

    Returns:
        Tuple of rates (..., L) and objective mu . r (..., ), the objective
        being -inf where no candidate is feasible.
    """
    masks = subset_masks(rho.size).astype(float)
    best_rates = np.zeros(capacities.shape[:-1] + (rho.size,))
    best_value = np.full(capacities.shape[:-1], -np.inf)
    for rates in vertex_candidates(capacities, rho):
        inside = np.all(rates @ masks.T <= capacities + 1e-12, axis=-1)
        inside &= np.all(rates >= rho - 1e-12, axis=-1)
        value = np.where(inside, rates @ mu, -np.inf)
        better = value > best_value
        best_value = np.where(better, value, best_value)
        best_rates = np.where(better[..., None], rates, best_rates)
    return best_rates, best_value
