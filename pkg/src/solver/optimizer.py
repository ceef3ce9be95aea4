"""Boundary tracing of the minimum-rate capacity region.

Each boundary point maximizes a weighted sum of average rates. The per-state
Lagrangian

    max_t  sum_i mu(i) r(i) - (lambda_tx(i) - lambda_rx h(i)) t(i),  r in C(h, t)

is solved by grid search in every joint fade state. The multipliers are then
adjusted until the average power of every user matches its harvest
(Gauss-Seidel over users, bracketed root finding per user), the receiver
delivery constraint holds with complementary slackness (bisection on
lambda_rx) and, for the time-switching and power-splitting receivers, the
erasure fraction is self-consistent with the policy (damped fixed point).

Only the linear power price depends on the multipliers, so the rates of each
state's candidate powers are kept between evaluations and re-priced.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np
from scipy.optimize import brentq

from src.channel.fading import JointFadeTable
from src.channel.region import (
    PolicyTable,
    RateVector,
    ReceiverEnergetics,
    ReceiverModel,
    deficit,
    erasure_fraction,
    subset_capacities,
    subset_masks,
)
from src.exceptions import (
    DimensionMismatchError,
    InfeasibleEnergyError,
    InfeasibleMinRateError,
    InfeasibleScenarioError,
    InvalidParameterError,
    NoFixedPointError,
    SwiptError,
    UnboundedObjectiveError,
)
from src.solver.allocation import enumerate_best_rates, feasible, greedy_rates, reward_order

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
CAP_TOLERANCE = 1e-12
STALL_ITERATIONS = 5
MAX_RECENTRES = 4
SEARCH_TOLERANCE = 1e-9
BRACKET_STEP = 0.05


@dataclass(frozen=True)
class Scenario:
    """A complete problem instance; every energy is in J/slot."""

    mean_harvest_tx: np.ndarray
    fading: JointFadeTable
    rho: RateVector
    sigma2: float
    energetics: ReceiverEnergetics
    model: ReceiverModel
    name: str = "scenario"

    def __post_init__(self) -> None:
        """Freeze arrays and check consistency."""
        means = np.array(self.mean_harvest_tx, dtype=float)
        means.setflags(write=False)
        object.__setattr__(self, "mean_harvest_tx", means)

        if means.ndim != 1 or means.size < 1:
            raise InvalidParameterError("at least one user is required")
        if np.any(means < 0):
            raise InvalidParameterError("harvest means must be nonnegative")
        if self.fading.num_users != means.size:
            raise DimensionMismatchError("fading users", means.size, self.fading.num_users)
        if len(self.rho) != means.size:
            raise DimensionMismatchError("minimum rates", means.size, len(self.rho))
        if self.sigma2 <= 0:
            raise InvalidParameterError("noise variance must be positive", sigma2=self.sigma2)

    @property
    def num_users(self) -> int:
        """Number of transmitters L."""
        return int(self.mean_harvest_tx.size)

    @property
    def deficit(self) -> float:
        """Receiver energy deficit (J/slot)."""
        return deficit(self.energetics)

    def with_model(self, model: ReceiverModel) -> Scenario:
        """Same instance with another receiver."""
        return replace(self, model=model)

    def with_rho(self, rho: Sequence[float]) -> Scenario:
        """Same instance with other minimum rates."""
        return replace(self, rho=RateVector(np.asarray(rho, dtype=float)))

    def with_deficit(self, value: float) -> Scenario:
        """Same instance with receiver consumption set to produce ``value``."""
        energetics = replace(
            self.energetics,
            mean_consumption_rx=self.energetics.mean_harvest_rx + max(value, 0.0),
        )
        return replace(self, energetics=energetics)

    def with_harvest(self, means: Sequence[float]) -> Scenario:
        """Same instance with other transmitter harvest means."""
        return replace(self, mean_harvest_tx=np.asarray(means, dtype=float))


@dataclass(frozen=True)
class RewardVector:
    """Nonnegative rate rewards selecting a boundary point."""

    mu: np.ndarray

    def __post_init__(self) -> None:
        """Freeze and check the rewards."""
        mu = np.array(self.mu, dtype=float)
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        if mu.ndim != 1 or np.any(mu < 0):
            raise InvalidParameterError("rewards must be a nonnegative vector")
        if not np.any(mu > 0):
            raise InvalidParameterError("rewards must not all be zero")

    def normalized(self) -> RewardVector:
        """Rewards scaled to sum to one."""
        return RewardVector(self.mu / self.mu.sum())

    @classmethod
    def uniform(cls, num_users: int) -> RewardVector:
        """Equal rewards 1/L."""
        return cls(np.full(num_users, 1.0 / num_users))


@dataclass(frozen=True)
class Multipliers:
    """Dual variables of the power and delivery constraints."""

    lambda_tx: np.ndarray
    lambda_rx: float = 0.0

    def __post_init__(self) -> None:
        """Freeze and check signs."""
        lam = np.array(self.lambda_tx, dtype=float)
        lam.setflags(write=False)
        object.__setattr__(self, "lambda_tx", lam)
        if np.any(lam < 0) or self.lambda_rx < 0:
            raise InvalidParameterError("multipliers must be nonnegative")

    def scaled(self, factor: float) -> Multipliers:
        """All multipliers multiplied by ``factor``."""
        return Multipliers(self.lambda_tx * factor, self.lambda_rx * factor)


@dataclass(frozen=True)
class BoundaryPoint:
    """One solved point of a region boundary."""

    mu: RewardVector
    avg_rates: RateVector
    policy: PolicyTable
    multipliers: Multipliers
    pi_e: float
    delivered: float
    model: ReceiverModel = ReceiverModel.IDEAL
    avg_powers: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def sum_rate(self) -> float:
        """Sum of the average rates."""
        return float(self.avg_rates.rates.sum())


@dataclass(frozen=True)
class GridSpec:
    """Per-user power search grid.

    The coarse round spans [0, cap] with ``coarse_points`` per user. Each of
    the ``refine_rounds`` rounds re-centres a grid of ``refine_points`` per
    user on the incumbent, spanning one previous step either side. The
    refinement starts from the ``refine_seeds`` best coarse points and from
    the minimum-power corners of the feasible set; a search whose best point
    lands on the window edge moves the window up to ``refine_moves`` times
    before the step shrinks.
    """

    caps: np.ndarray
    coarse_points: int = 21
    refine_points: int = 11
    refine_rounds: int = 3
    refine_seeds: int = 2
    refine_moves: int = 4

    def __post_init__(self) -> None:
        """Check the grid shape."""
        caps = np.array(self.caps, dtype=float)
        caps.setflags(write=False)
        object.__setattr__(self, "caps", caps)
        if np.any(caps < 0):
            raise InvalidParameterError("grid caps must be nonnegative")
        if self.coarse_points < 1:
            raise InvalidParameterError("coarse grid needs at least one point")
        if self.refine_rounds and (self.refine_points < 3 or self.refine_points % 2 == 0):
            raise InvalidParameterError(
                "refinement grid needs an odd number of points >= 3",
                refine_points=self.refine_points,
            )
        if self.refine_seeds < 1 or self.refine_moves < 0:
            raise InvalidParameterError(
                "refinement needs a seed and a nonnegative move budget",
                refine_seeds=self.refine_seeds,
                refine_moves=self.refine_moves,
            )

    @classmethod
    def uniform(cls, caps: Sequence[float] | np.ndarray, points: int) -> GridSpec:
        """Plain uniform grid without refinement."""
        return cls(caps=np.asarray(caps, dtype=float), coarse_points=points, refine_rounds=0)

    def coarse_step(self) -> np.ndarray:
        """Spacing of the coarse grid per user."""
        if self.coarse_points == 1:
            return np.zeros_like(self.caps)
        return self.caps / (self.coarse_points - 1)

    def final_step(self) -> np.ndarray:
        """Spacing after all refinement rounds."""
        shrink = (2.0 / (self.refine_points - 1)) ** self.refine_rounds if self.refine_rounds else 1.0
        return self.coarse_step() * shrink

    def coarse_points_array(self) -> np.ndarray:
        """All coarse grid points (P, L), lexicographic."""
        if self.coarse_points == 1:
            return self.caps[None, :].copy()
        axes = [np.linspace(0.0, cap, self.coarse_points) for cap in self.caps]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.caps.size)

    def refine_offsets(self) -> np.ndarray:
        """Unit offsets (Q, L) of a refinement grid, centre included."""
        axis = np.linspace(-1.0, 1.0, self.refine_points)
        return np.array(list(product(axis, repeat=self.caps.size)))


@dataclass(frozen=True)
class SolverOptions:
    """Tuning of the boundary solver."""

    coarse_points: int = 21
    refine_points: int = 11
    refine_rounds: int = 3
    refine_seeds: int = 2
    refine_moves: int = 4
    cap_multiplier: float = 20.0
    power_rtol: float = 1e-4
    max_sweeps: int = 50
    damping: float = 0.5
    max_fixed_point_iter: int = 100
    fixed_point_tol: float = 1e-6
    epsilon_fraction: float = 1e-3
    lambda_floor: float = 1e-9
    rx_bisection_iter: int = 60
    max_bracket_expansions: int = 80
    workers: int = 1

    def grid_for(self, scenario: Scenario) -> GridSpec:
        """Search grid capped at ``cap_multiplier`` times each harvest mean."""
        return GridSpec(
            caps=self.cap_multiplier * scenario.mean_harvest_tx,
            coarse_points=self.coarse_points,
            refine_points=self.refine_points,
            refine_rounds=self.refine_rounds,
            refine_seeds=self.refine_seeds,
            refine_moves=self.refine_moves,
        )


@dataclass(frozen=True)
class StateSolution:
    """Per-state optimum for every joint state."""

    powers: np.ndarray
    rates: np.ndarray
    objective: np.ndarray


def _state_values(
    gains: np.ndarray,
    candidates: np.ndarray,
    mu: np.ndarray,
    rho: np.ndarray,
    sigma2: float,
    model: ReceiverModel,
    pi_e: float,
    exhaustive: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Rates and weighted rate (-inf where rho is unsupported) of every candidate."""
    caps = subset_capacities(gains[:, None, :], candidates, sigma2, model, pi_e)
    if exhaustive:
        return enumerate_best_rates(caps, rho, mu)
    rates = greedy_rates(caps, rho, mu)
    return rates, np.where(feasible(caps, rho), rates @ mu, -np.inf)


def _state_objective(
    gains: np.ndarray,
    candidates: np.ndarray,
    costs: np.ndarray,
    mu: np.ndarray,
    rho: np.ndarray,
    sigma2: float,
    model: ReceiverModel,
    pi_e: float,
    exhaustive: bool,
) -> tuple[np.ndarray, np.ndarray]:
    rates, value = _state_values(gains, candidates, mu, rho, sigma2, model, pi_e, exhaustive)
    return rates, value - np.einsum("sql,sl->sq", candidates, costs)


def _pick(
    candidates: np.ndarray, rates: np.ndarray, objective: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    best = np.argmax(objective, axis=1)
    rows = np.arange(candidates.shape[0])
    return candidates[rows, best], rates[rows, best], objective[rows, best]


def required_snr(rho: np.ndarray, model: ReceiverModel, pi_e: float) -> np.ndarray:
    """Summed SNR each subset needs to carry its minimum rates.

    Args:
        rho: Minimum rates (L,)
        model: Receiver model
        pi_e: Erasure fraction

    Returns:
        Array (2^L - 1,) ordered as :func:`subset_masks`; inf where unreachable
    """
    demand = subset_masks(rho.size).astype(float) @ np.asarray(rho, dtype=float)
    prelog = 1.0 - pi_e if model is not ReceiverModel.IDEAL else 1.0
    with np.errstate(over="ignore", divide="ignore"):
        if model is ReceiverModel.TIME_SWITCHING:
            if prelog <= 0:
                return np.where(demand > 0, np.inf, 0.0)
            return np.expm1(2.0 * LN2 * demand / prelog)
        snr = np.expm1(2.0 * LN2 * demand)
        if model is ReceiverModel.POWER_SPLITTING:
            if prelog <= 0:
                return np.where(demand > 0, np.inf, 0.0)
            return snr / prelog
        return snr


def corner_seeds(
    gains: np.ndarray,
    mu: np.ndarray,
    rho: np.ndarray,
    sigma2: float,
    model: ReceiverModel,
    pi_e: float,
    caps: np.ndarray,
) -> list[np.ndarray]:
    """Minimum-power points that meet rho exactly, one per decoding order.

    The received powers needed by each subset form a supermodular set
    function, so filling users in a fixed order gives a vertex of the feasible
    set. The decreasing and increasing reward orders are used. Unreachable
    corners are returned at the grid cap.
    """
    needed = sigma2 * required_snr(rho, model, pi_e)
    order = reward_order(mu)
    orders = [order] if order.size == 1 else [order, order[::-1]]
    seeds = []
    for users in orders:
        powers = np.empty_like(gains)
        code, previous = 0, 0.0
        for user in users:
            code |= 1 << int(user)
            with np.errstate(invalid="ignore"):
                received = needed[code - 1] - previous
            powers[:, user] = received / gains[:, user]
            previous = needed[code - 1]
        seeds.append(np.where(np.isfinite(powers), np.clip(powers, 0.0, caps), caps))
    return seeds


def _refine(
    gains: np.ndarray,
    costs: np.ndarray,
    start: tuple[np.ndarray, np.ndarray, np.ndarray],
    grid: GridSpec,
    args: tuple,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    point, point_rates, value = (np.array(a, dtype=float) for a in start)
    offsets = grid.refine_offsets()
    step = grid.coarse_step()
    for _ in range(grid.refine_rounds):
        active = np.arange(point.shape[0])
        for _ in range(grid.refine_moves + 1):
            centre = point[active]
            candidates = np.clip(centre[:, None, :] + offsets[None, :, :] * step, 0.0, grid.caps)
            rates, objective = _state_objective(gains[active], candidates, costs[active], *args)
            best, best_rates, best_value = _pick(candidates, rates, objective)
            better = best_value > value[active]
            moved = active[better]
            point[moved], point_rates[moved], value[moved] = (
                best[better], best_rates[better], best_value[better]
            )
            inside = (best > 0.0) & (best < grid.caps)
            edge = np.any(inside & (np.abs(best - centre) >= step * (1.0 - 1e-9)) & (step > 0), axis=-1)
            active = active[better & edge]
            if active.size == 0:
                break
        step = step * 2.0 / (grid.refine_points - 1)
    return point, point_rates, value


def _raise_infeasible(value: np.ndarray, gains: np.ndarray, rho: RateVector) -> None:
    missing = ~np.isfinite(value)
    if np.any(missing):
        raise InfeasibleMinRateError(
            f"no grid point supports the minimum rates in {int(np.sum(missing))} state(s)",
            gains=gains[int(np.flatnonzero(missing)[0])].tolist(),
            rho=rho.rates.tolist(),
        )


def solve_states(
    gains: np.ndarray,
    mu: RewardVector,
    lam: Multipliers,
    rho: RateVector,
    sigma2: float,
    model: ReceiverModel,
    pi_e: float,
    grid: GridSpec,
    exhaustive: bool = False,
) -> StateSolution:
    """Per-state Lagrangian optimum for every row of ``gains``.

    The coarse grid is searched exhaustively. Refinement then runs from each
    seed (the best coarse points and the corners of :func:`corner_seeds`) and
    the best refined point wins, so the result never falls below the coarse
    optimum.

    Args:
        gains: Fade vectors (S, L)
        mu: Rate rewards
        lam: Multipliers
        rho: Minimum rates
        sigma2: Noise variance (J/slot)
        model: Receiver model
        pi_e: Erasure fraction
        grid: Search grid
        exhaustive: Allocate rates by vertex enumeration instead of greedily

    Returns:
        Optimal powers, rates and objective per state
    """
    gains = np.atleast_2d(np.asarray(gains, dtype=float))
    num_states, num_users = gains.shape
    for name, size in (("rewards", mu.mu.size), ("multipliers", lam.lambda_tx.size),
                       ("minimum rates", len(rho)), ("grid caps", grid.caps.size)):
        if size != num_users:
            raise DimensionMismatchError(name, num_users, size)

    costs = lam.lambda_tx[None, :] - lam.lambda_rx * gains
    args = (mu.mu, rho.rates, sigma2, model, pi_e, exhaustive)

    base = grid.coarse_points_array()
    candidates = np.broadcast_to(base, (num_states,) + base.shape)
    rates, objective = _state_objective(gains, candidates, costs, *args)
    if not grid.refine_rounds:
        point, point_rates, value = _pick(candidates, rates, objective)
        _raise_infeasible(value, gains, rho)
        _check_caps(point, gains, lam, grid)
        return StateSolution(powers=point, rates=point_rates, objective=value)

    rows = np.arange(num_states)
    ranked = np.argsort(-objective, axis=1, kind="stable")[:, : grid.refine_seeds]
    starts = [
        (candidates[rows, column], rates[rows, column], objective[rows, column])
        for column in ranked.T
    ]
    for seed in corner_seeds(gains, mu.mu, rho.rates, sigma2, model, pi_e, grid.caps):
        starts.append((seed, np.zeros_like(seed), np.full(num_states, -np.inf)))

    refined = [_refine(gains, costs, start, grid, args) for start in starts]
    winner = np.argmax(np.stack([result[2] for result in refined]), axis=0)
    point = np.stack([result[0] for result in refined])[winner, rows]
    point_rates = np.stack([result[1] for result in refined])[winner, rows]
    value = np.stack([result[2] for result in refined])[winner, rows]

    _raise_infeasible(value, gains, rho)
    _check_caps(point, gains, lam, grid)
    return StateSolution(powers=point, rates=point_rates, objective=value)


def _check_caps(point: np.ndarray, gains: np.ndarray, lam: Multipliers, grid: GridSpec) -> None:
    at_cap = (point >= grid.caps * (1.0 - CAP_TOLERANCE)) & (grid.caps > 0)
    if not np.any(at_cap):
        return
    unpriced = lam.lambda_tx[None, :] <= lam.lambda_rx * gains
    unbounded = at_cap & unpriced
    if np.any(unbounded):
        state, user = (int(v) for v in np.argwhere(unbounded)[0])
        raise UnboundedObjectiveError(
            user, float(lam.lambda_tx[user]), lam.lambda_rx, float(gains[state, user])
        )
    logger.warning(
        "Power grid cap reached in %d state/user pairs; the cap may be binding",
        int(np.sum(at_cap)),
    )


def per_state_solve(
    h: Sequence[float] | np.ndarray,
    mu: RewardVector,
    lam: Multipliers,
    rho: RateVector,
    sigma2: float,
    model: ReceiverModel,
    pi_e: float,
    grid: GridSpec,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Optimal power vector, rate vector and objective in one fade state."""
    solution = solve_states(np.asarray(h, dtype=float)[None, :], mu, lam, rho, sigma2, model, pi_e, grid)
    return solution.powers[0], solution.rates[0], float(solution.objective[0])


def per_state_oracle(
    h: Sequence[float] | np.ndarray,
    mu: RewardVector,
    lam: Multipliers,
    rho: RateVector,
    sigma2: float,
    model: ReceiverModel,
    pi_e: float,
    grid: GridSpec,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Brute-force counterpart of :func:`per_state_solve`.

    Searches every point of the uniform grid ``GridSpec.uniform(grid.caps,
    grid.coarse_points)`` and every vertex of the rate polytope.
    """
    dense = GridSpec.uniform(grid.caps, grid.coarse_points)
    solution = solve_states(
        np.asarray(h, dtype=float)[None, :], mu, lam, rho, sigma2, model, pi_e, dense,
        exhaustive=True,
    )
    return solution.powers[0], solution.rates[0], float(solution.objective[0])


def _prelog(model: ReceiverModel, pi_e: float) -> float:
    return 1.0 - pi_e if model is ReceiverModel.TIME_SWITCHING else 1.0


class DualSolver:
    """Finds the multipliers and erasure fraction of one boundary point.

    Every state keeps a fixed candidate set: the coarse grid plus the
    refinement windows around its current incumbent. Rates of those
    candidates do not depend on the multipliers, so they are computed once
    per erasure fraction and each evaluation only re-prices them. After the
    multipliers converge a full :func:`solve_states` search checks the
    incumbents; states it improves get new windows and the balance resumes.
    """

    def __init__(
        self,
        scenario: Scenario,
        mu: RewardVector,
        options: SolverOptions | None = None,
        *,
        backoff: bool = False,
        fixed_pi_e: float | None = None,
        enforce_delivery: bool = True,
        initial: Multipliers | None = None,
        initial_pi_e: float | None = None,
    ):
        """Initialize the solver.

        Args:
            scenario: Problem instance
            mu: Rate rewards
            options: Solver tuning
            backoff: Target E[Y] - epsilon instead of E[Y] (simulation policies)
            fixed_pi_e: Use this erasure fraction instead of the fixed point
            enforce_delivery: Impose the receiver delivery constraint
            initial: Warm-start multipliers
            initial_pi_e: Warm-start erasure fraction for the fixed point
        """
        if mu.mu.size != scenario.num_users:
            raise DimensionMismatchError("rewards", scenario.num_users, mu.mu.size)
        self.scenario = scenario
        self.mu = mu
        self.options = options or SolverOptions()
        self.grid = self.options.grid_for(scenario)
        self.fixed_pi_e = fixed_pi_e
        self.deficit = scenario.deficit if enforce_delivery else 0.0

        backoff_energy = self.options.epsilon_fraction * scenario.mean_harvest_tx if backoff else 0.0
        self.targets = scenario.mean_harvest_tx - backoff_energy
        self.max_gains = scenario.fading.max_gains()

        table = scenario.fading
        inverse_gain = table.probs @ (1.0 / table.states)
        weights = np.maximum(mu.mu, 1e-3 * mu.mu.max())
        self.lambda_guess = weights / (2.0 * LN2 * (self.targets + scenario.sigma2 * inverse_gain))
        self.lambda_ref = float(self.lambda_guess.max())
        self.initial = initial
        self.initial_pi_e = initial_pi_e
        self.evaluations = 0
        self.searches = 0

        self._candidates: np.ndarray | None = None
        self._values: tuple[float, np.ndarray, np.ndarray] | None = None

    def search(self, lam: Multipliers, pi_e: float) -> StateSolution:
        """Full coarse-to-fine search in every state."""
        self.searches += 1
        s = self.scenario
        return solve_states(s.fading.states, self.mu, lam, s.rho, s.sigma2, s.model, pi_e, self.grid)

    def recentre(self, centres: np.ndarray) -> None:
        """Rebuild the candidate windows around ``centres`` (S, L)."""
        grid = self.grid
        coarse = grid.coarse_points_array()
        blocks = [np.broadcast_to(coarse, (centres.shape[0],) + coarse.shape)]
        if grid.refine_rounds:
            offsets = grid.refine_offsets()
            step = grid.coarse_step()
            for _ in range(grid.refine_rounds):
                blocks.append(np.clip(centres[:, None, :] + offsets[None, :, :] * step, 0.0, grid.caps))
                step = step * 2.0 / (grid.refine_points - 1)
        self._candidates = np.concatenate(blocks, axis=1)
        self._values = None

    def _candidate_values(self, pi_e: float) -> tuple[np.ndarray, np.ndarray]:
        if self._values is None or self._values[0] != pi_e:
            s = self.scenario
            rates, value = _state_values(
                s.fading.states, self._candidates, self.mu.mu, s.rho.rates, s.sigma2, s.model, pi_e
            )
            self._values = (pi_e, rates, value)
        return self._values[1], self._values[2]

    def evaluate(self, lam: Multipliers, pi_e: float) -> StateSolution:
        """Per-state optimum over the candidate set at the given multipliers."""
        if self._candidates is None:
            self.recentre(self.search(lam, pi_e).powers)
        self.evaluations += 1
        states = self.scenario.fading.states
        rates, value = self._candidate_values(pi_e)
        costs = lam.lambda_tx[None, :] - lam.lambda_rx * states
        objective = value - np.einsum("sql,sl->sq", self._candidates, costs)
        powers, best_rates, best = _pick(self._candidates, rates, objective)
        _raise_infeasible(best, states, self.scenario.rho)
        _check_caps(powers, states, lam, self.grid)
        return StateSolution(powers=powers, rates=best_rates, objective=best)

    def average_powers(self, solution: StateSolution) -> np.ndarray:
        """E_H[T_i(H)] per user."""
        return self.scenario.fading.probs @ solution.powers

    def delivered(self, solution: StateSolution) -> float:
        """eta * sum_i E_H[H(i) T_i(H)]."""
        table = self.scenario.fading
        return float(self.scenario.energetics.eta * np.sum(table.probs @ (table.states * solution.powers)))

    def check_feasibility(self) -> None:
        """Reject instances whose energy or rate demands cannot be met."""
        s = self.scenario
        deliverable = float(s.energetics.eta * np.dot(self.max_gains, self.targets))
        if self.deficit > deliverable * (1.0 + 1e-12):
            raise InfeasibleEnergyError(self.deficit, deliverable)

        # Single-user power needed for rho_i ignores interference, so it is a lower bound
        table = s.fading
        required = (2.0 ** (2.0 * s.rho.rates) - 1.0) * s.sigma2 * (table.probs @ (1.0 / table.states))
        for user in np.flatnonzero(required > self.targets * (1.0 + 1e-12)):
            raise InfeasibleScenarioError(int(user), float(required[user]), float(self.targets[user]))

    def solve(self) -> BoundaryPoint:
        """Run the fixed point, the delivery bisection and the power balance."""
        self.check_feasibility()
        s = self.scenario
        lam = self.initial or Multipliers(self.lambda_guess, 0.0)

        iterates_pi = (
            self.fixed_pi_e is None
            and s.model is not ReceiverModel.IDEAL
            and self.deficit > 0
        )
        if self.fixed_pi_e is not None:
            pi_e = self.fixed_pi_e
        elif iterates_pi and self.initial_pi_e is not None and 0.0 < self.initial_pi_e < 1.0:
            pi_e = self.initial_pi_e
        elif iterates_pi:
            rough = self.deficit / (s.energetics.eta * np.dot(table_means(s.fading), self.targets))
            pi_e = float(min(rough, 0.99))
        else:
            pi_e = 0.0

        self.recentre(self.search(lam, pi_e).powers)
        for attempt in range(1, MAX_RECENTRES + 1):
            solution, lam, pi_e, delivered = self._fixed_point(lam, pi_e, iterates_pi)
            refined = self.search(lam, pi_e)
            improved = refined.objective - solution.objective > SEARCH_TOLERANCE * (
                1.0 + np.abs(solution.objective)
            )
            if not np.any(improved):
                break
            logger.debug("Search improved %d states; re-centring (pass %d)", int(improved.sum()), attempt)
            self.recentre(np.where(improved[:, None], refined.powers, solution.powers))
        else:
            logger.info("Candidate windows still moving after %d passes", MAX_RECENTRES)
        return self._boundary_point(solution, lam, pi_e, delivered)

    def _fixed_point(
        self, lam: Multipliers, pi_e: float, iterates_pi: bool
    ) -> tuple[StateSolution, Multipliers, float, float]:
        options = self.options
        residual = math.inf
        best: tuple[float, StateSolution, Multipliers, float, float] | None = None
        stale = 0
        for iteration in range(1, options.max_fixed_point_iter + 1):
            lam, solution = self._solve_multipliers(pi_e, lam)
            delivered = self.delivered(solution)
            if not iterates_pi:
                return solution, lam, pi_e, delivered

            implied = erasure_fraction(self.deficit, delivered, strict=True)
            residual = abs(implied - pi_e)
            logger.debug(
                "Fixed point iteration %d: pi_e=%.9f implied=%.9f residual=%.3g",
                iteration,
                pi_e,
                implied,
                residual,
            )
            if residual <= options.fixed_point_tol:
                return solution, lam, pi_e, delivered

            if best is None or residual < best[0]:
                best, stale = (residual, solution, lam, pi_e, delivered), 0
            else:
                stale += 1
            # Delivery moves in grid steps, so the implied fraction can alternate across one
            if stale >= STALL_ITERATIONS and best[0] <= self._pi_resolution(best[3], best[4]):
                logger.info(
                    "Erasure fraction settled at grid resolution (residual=%.3g)", best[0]
                )
                return best[1], best[2], best[3], best[4]
            pi_e = (1.0 - options.damping) * pi_e + options.damping * implied

        raise NoFixedPointError(options.max_fixed_point_iter, residual)

    def _pi_resolution(self, pi_e: float, delivered: float) -> float:
        """Change of the implied erasure fraction when every power moves one grid step."""
        quantum = self.scenario.energetics.eta * float(
            np.dot(table_means(self.scenario.fading), self.grid.final_step())
        )
        return max(pi_e, self.deficit / delivered) * quantum / delivered

    def _boundary_point(
        self, solution: StateSolution, lam: Multipliers, pi_e: float, delivered: float
    ) -> BoundaryPoint:
        s = self.scenario
        avg_rates = np.maximum(s.fading.probs @ solution.rates, 0.0)
        prelog = _prelog(s.model, pi_e)
        slot_rates = solution.rates / prelog if prelog > 0 else np.zeros_like(solution.rates)
        point = BoundaryPoint(
            mu=self.mu,
            avg_rates=RateVector(avg_rates),
            policy=PolicyTable(powers=solution.powers, rates=np.maximum(slot_rates, 0.0)),
            multipliers=lam,
            pi_e=pi_e if s.model is not ReceiverModel.IDEAL else 0.0,
            delivered=delivered,
            model=s.model,
            avg_powers=self.average_powers(solution),
        )
        logger.info(
            "%s mu=%s -> R=%s pi_e=%.6f (%d evaluations, %d searches)",
            s.model.value,
            np.round(self.mu.mu, 4).tolist(),
            np.round(avg_rates, 6).tolist(),
            point.pi_e,
            self.evaluations,
            self.searches,
        )
        return point

    def _solve_multipliers(
        self, pi_e: float, lam: Multipliers
    ) -> tuple[Multipliers, StateSolution]:
        lam = self._balance_powers(pi_e, Multipliers(lam.lambda_tx, 0.0))
        solution = self.evaluate(lam, pi_e)
        delivered = self.delivered(solution)
        if self.deficit <= 0 or delivered >= self.deficit:
            return lam, solution

        logger.debug("Delivery %.6g below deficit %.6g; raising lambda_rx", delivered, self.deficit)
        low = 0.0
        high = 0.1 * float(np.min(lam.lambda_tx / self.max_gains))
        best_delivered = delivered
        for _ in range(self.options.max_bracket_expansions):
            high_lam = self._balance_powers(pi_e, Multipliers(lam.lambda_tx, high))
            high_solution = self.evaluate(high_lam, pi_e)
            high_delivered = self.delivered(high_solution)
            best_delivered = max(best_delivered, high_delivered)
            if high_delivered >= self.deficit:
                break
            low, lam = high, high_lam
            high *= 2.0
        else:
            raise InfeasibleEnergyError(self.deficit, best_delivered)

        for _ in range(self.options.rx_bisection_iter):
            if high_delivered - self.deficit <= self.options.power_rtol * self.deficit:
                break
            middle = 0.5 * (low + high)
            mid_lam = self._balance_powers(pi_e, Multipliers(high_lam.lambda_tx, middle))
            mid_solution = self.evaluate(mid_lam, pi_e)
            mid_delivered = self.delivered(mid_solution)
            if mid_delivered >= self.deficit:
                high, high_lam, high_solution, high_delivered = middle, mid_lam, mid_solution, mid_delivered
            else:
                low = middle
        logger.debug("lambda_rx=%.6g delivers %.6g", high, high_delivered)
        return high_lam, high_solution

    def _lower_bounds(self, lambda_rx: float) -> np.ndarray:
        floor = self.options.lambda_floor * self.lambda_ref
        return lambda_rx * self.max_gains * (1.0 + 1e-9) + floor

    def _balanced(self, powers: np.ndarray, lam: np.ndarray, lower: np.ndarray) -> bool:
        rtol = self.options.power_rtol
        for user, power in enumerate(powers):
            target = self.targets[user]
            if abs(power - target) <= rtol * max(target, 1e-300):
                continue
            if lam[user] <= lower[user] * (1.0 + 1e-9) and power <= target * (1.0 + rtol):
                continue
            return False
        return True

    def _balance_powers(self, pi_e: float, lam: Multipliers) -> Multipliers:
        lower = self._lower_bounds(lam.lambda_rx)
        lam_tx = np.maximum(np.array(lam.lambda_tx, dtype=float), 2.0 * lower)
        for sweep in range(1, self.options.max_sweeps + 1):
            previous = lam_tx.copy()
            for user in range(self.scenario.num_users):
                lam_tx[user] = self._bisect_user(user, lam_tx, lam.lambda_rx, lower[user], pi_e)
            powers = self.average_powers(self.evaluate(Multipliers(lam_tx, lam.lambda_rx), pi_e))
            logger.debug("Sweep %d: lambda_tx=%s powers=%s", sweep, lam_tx.tolist(), powers.tolist())
            if self._balanced(powers, lam_tx, lower):
                return Multipliers(lam_tx.copy(), lam.lambda_rx)
            # Grid powers make E[T] a staircase in lambda; a jump may straddle the target
            if sweep > 1 and np.allclose(np.log(lam_tx), np.log(previous), rtol=0.0, atol=self.options.power_rtol):
                logger.debug("Multipliers settled on a power jump after %d sweeps", sweep)
                return Multipliers(lam_tx.copy(), lam.lambda_rx)
        logger.warning(
            "Average power targets not met within %d sweeps (powers=%s, targets=%s)",
            self.options.max_sweeps,
            powers.tolist(),
            self.targets.tolist(),
        )
        return Multipliers(lam_tx.copy(), lam.lambda_rx)

    def _bisect_user(
        self, user: int, lam_tx: np.ndarray, lambda_rx: float, lower: float, pi_e: float
    ) -> float:
        target = self.targets[user]
        tolerance = self.options.power_rtol * max(target, 1e-300)
        cache: dict[float, float] = {}

        def excess(log_lambda: float) -> float:
            if log_lambda not in cache:
                trial = lam_tx.copy()
                trial[user] = math.exp(log_lambda)
                solution = self.evaluate(Multipliers(trial, lambda_rx), pi_e)
                cache[log_lambda] = float(self.average_powers(solution)[user]) - target
            return cache[log_lambda]

        current = math.log(max(lam_tx[user], lower))
        value = excess(current)
        if abs(value) <= tolerance:
            return math.exp(current)

        log_lower = math.log(lower)
        step = BRACKET_STEP
        if value > 0:
            low, high = current, current + step
            for _ in range(self.options.max_bracket_expansions):
                if excess(high) <= 0:
                    break
                step = min(2.0 * step, LN2)
                low, high = high, high + step
            else:
                raise InfeasibleScenarioError(user, target + excess(high), target)
        else:
            low, high = max(current - step, log_lower), current
            while excess(low) < 0:
                if low <= log_lower:
                    return lower
                step = min(2.0 * step, LN2)
                low, high = max(low - step, log_lower), low

        if excess(low) == 0:
            return math.exp(low)
        if excess(high) == 0:
            return math.exp(high)
        root = brentq(excess, low, high, xtol=self.options.power_rtol / 4.0, maxiter=200)
        return math.exp(root)


def table_means(table: JointFadeTable) -> np.ndarray:
    """Mean gain per user."""
    return table.probs @ table.states


def dual_solve(
    scenario: Scenario,
    mu: RewardVector,
    options: SolverOptions | None = None,
    *,
    backoff: bool = False,
    initial: Multipliers | None = None,
    initial_pi_e: float | None = None,
) -> BoundaryPoint:
    """Boundary point of the scenario's region for rewards ``mu``."""
    return DualSolver(
        scenario, mu, options, backoff=backoff, initial=initial, initial_pi_e=initial_pi_e
    ).solve()


def no_transfer_point(
    scenario: Scenario, mu: RewardVector, options: SolverOptions | None = None
) -> BoundaryPoint:
    """Boundary point when the receiver cannot harvest RF energy.

    The receiver then stays awake only in the fraction E[Y_r]/E[T_r] of the
    slots it can power from ambient harvest alone.
    """
    energetics = scenario.energetics
    consumption = energetics.mean_consumption_rx
    asleep = scenario.deficit / consumption if consumption > 0 else 0.0
    baseline = scenario.with_model(ReceiverModel.TIME_SWITCHING)
    return DualSolver(
        baseline, mu, options, fixed_pi_e=asleep, enforce_delivery=False
    ).solve()


def reward_grid(num_users: int, mu_grid: int) -> list[RewardVector]:
    """Rewards on a uniform grid of the unit simplex, endpoints included.

    For two users the rewards are (theta, 1 - theta) with theta ascending.
    """
    if mu_grid < 2:
        raise InvalidParameterError("mu grid needs at least two points", mu_grid=mu_grid)
    if num_users == 1:
        return [RewardVector(np.ones(1))]
    steps = mu_grid - 1
    rewards = []
    for head in product(range(steps + 1), repeat=num_users - 1):
        rest = steps - sum(head)
        if rest >= 0:
            rewards.append(RewardVector(np.array([*head, rest], dtype=float) / steps))
    return rewards


def _solve_reward(args: tuple[Scenario, RewardVector, SolverOptions]) -> BoundaryPoint | SwiptError:
    scenario, mu, options = args
    try:
        return dual_solve(scenario, mu, options)
    except SwiptError as e:
        return e


def sweep_rewards(
    scenario: Scenario,
    rewards: Sequence[RewardVector],
    options: SolverOptions | None = None,
) -> list[BoundaryPoint | SwiptError]:
    """Solve every reward vector; failures are returned in place, not raised."""
    options = options or SolverOptions()
    if options.workers > 1:
        with ProcessPoolExecutor(max_workers=options.workers) as pool:
            return list(pool.map(_solve_reward, [(scenario, mu, options) for mu in rewards]))

    results: list[BoundaryPoint | SwiptError] = []
    initial, initial_pi_e = None, None
    for mu in rewards:
        try:
            point = dual_solve(scenario, mu, options, initial=initial, initial_pi_e=initial_pi_e)
        except SwiptError as e:
            logger.warning("mu=%s infeasible for %s: %s", mu.mu.tolist(), scenario.model.value, e.detail)
            results.append(e)
            continue
        initial, initial_pi_e = point.multipliers, point.pi_e
        results.append(point)
    return results


def trace_boundary(
    scenario: Scenario, mu_grid: int, options: SolverOptions | None = None
) -> list[BoundaryPoint]:
    """Boundary points for rewards on a uniform simplex grid.

    Rewards whose problem is infeasible are skipped (and logged).
    """
    results = sweep_rewards(scenario, reward_grid(scenario.num_users, mu_grid), options)
    return [point for point in results if isinstance(point, BoundaryPoint)]


def sum_rate(scenario: Scenario, options: SolverOptions | None = None) -> float:
    """Largest sum of average rates (equal rewards)."""
    return dual_solve(scenario, RewardVector.uniform(scenario.num_users), options).sum_rate
