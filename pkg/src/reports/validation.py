"""Randomized oracle and property checks behind the ``validate`` command."""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from src.channel.fading import MarginalFading, joint_states, quantize_rayleigh
from src.channel.region import (
    RateVector,
    ReceiverEnergetics,
    ReceiverModel,
    feasible_min_rates,
    is_submodular,
    nonempty_subsets,
    subset_capacities,
)
from src.exceptions import InfeasibleEnergyError, SwiptError
from src.solver.allocation import greedy_rates
from src.solver.optimizer import (
    BoundaryPoint,
    GridSpec,
    Multipliers,
    RewardVector,
    Scenario,
    SolverOptions,
    dual_solve,
    per_state_oracle,
    per_state_solve,
    trace_boundary,
)
from src.solver.waterfilling import ergodic_water_filling, water_filling_power

logger = logging.getLogger(__name__)

EXACT_TOLERANCE = 1e-9
REFINED_TOLERANCE = 1e-3
REGION_TOLERANCE = 1e-6


@dataclass
class CheckResult:
    """Outcome of one check."""

    name: str
    passed: bool
    residual: float = 0.0
    detail: str = ""


@dataclass
class ValidationReport:
    """All check outcomes."""

    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """Whether every check passed."""
        return all(check.passed for check in self.checks)

    def add(self, check: CheckResult) -> None:
        """Append a result and log it."""
        self.checks.append(check)
        log = logger.info if check.passed else logger.error
        log("%s: %s (residual %.3g) %s", check.name, "pass" if check.passed else "FAIL",
            check.residual, check.detail)


def random_instance(rng: np.random.Generator, num_users: int) -> dict:
    """A per-state problem whose minimum rates are met somewhere on the grid."""
    sigma2 = 1.0
    gains = rng.uniform(0.1, 5.0, num_users)
    mu = rng.dirichlet(np.ones(num_users))
    lambda_tx = rng.uniform(0.05, 1.0, num_users)
    model = ReceiverModel(rng.choice([m.value for m in ReceiverModel]))
    pi_e = 0.0 if model is ReceiverModel.IDEAL else float(rng.uniform(0.0, 0.5))
    grid = GridSpec(caps=np.full(num_users, 20.0), coarse_points=11 if num_users > 1 else 41)

    anchor = rng.choice(grid.coarse_points_array())
    caps = subset_capacities(gains, anchor, sigma2, model, pi_e)
    vertex = greedy_rates(caps, np.zeros(num_users), rng.dirichlet(np.ones(num_users)))
    rho = RateVector(np.maximum(0.4 * rng.uniform(0.0, 1.0) * vertex, 0.0))

    return {
        "h": gains,
        "mu": RewardVector(mu),
        "lam": Multipliers(lambda_tx, 0.0),
        "rho": rho,
        "sigma2": sigma2,
        "model": model,
        "pi_e": pi_e,
        "grid": grid,
    }


def check_oracle(rng: np.random.Generator, instances: int) -> list[CheckResult]:
    """Grid solver against exhaustive enumeration, on equal and refined grids."""
    exact = refined = 0.0
    for _ in range(instances):
        case = random_instance(rng, int(rng.integers(1, 3)))
        grid = case.pop("grid")
        uniform = GridSpec.uniform(grid.caps, grid.coarse_points)
        _, _, value = per_state_solve(grid=uniform, **case)
        _, _, oracle = per_state_oracle(grid=uniform, **case)
        exact = max(exact, abs(value - oracle))

        _, _, better = per_state_solve(grid=grid, **case)
        dense = GridSpec.uniform(grid.caps, 201 if grid.caps.size == 1 else 81)
        _, _, reference = per_state_oracle(grid=dense, **case)
        refined = max(refined, reference - better, oracle - better)

    return [
        CheckResult("oracle, equal grids", exact <= EXACT_TOLERANCE, exact, f"{instances} instances"),
        CheckResult("oracle, refined grid", refined <= REFINED_TOLERANCE, max(refined, 0.0),
                    f"{instances} instances"),
    ]


def check_water_filling(rng: np.random.Generator, instances: int) -> CheckResult:
    """Single-user grid optimum within one final grid step of water-filling."""
    worst = 0.0
    for _ in range(instances):
        gain = float(rng.uniform(0.1, 5.0))
        price = float(rng.uniform(0.05, 1.0))
        grid = GridSpec(caps=np.array([20.0]))
        t, _, _ = per_state_solve(
            [gain], RewardVector([1.0]), Multipliers([price]), RateVector.zeros(1),
            1.0, ReceiverModel.IDEAL, 0.0, grid,
        )
        step = float(grid.final_step()[0])
        worst = max(worst, abs(t[0] - water_filling_power(gain, price, 1.0)) / step)
    return CheckResult("water-filling, per state", worst <= 1.0 + 1e-9, worst, "in final grid steps")


def check_dominance(rng: np.random.Generator, instances: int) -> CheckResult:
    """Ideal >= power splitting >= time switching for every subset."""
    worst = 0.0
    for _ in range(instances):
        num_users = int(rng.integers(1, 4))
        gains = rng.uniform(0.1, 5.0, num_users)
        powers = rng.uniform(0.0, 20.0, num_users)
        pi_e = float(rng.uniform())
        ideal, ps, ts = (
            subset_capacities(gains, powers, 1.0, model, pi_e)
            for model in (ReceiverModel.IDEAL, ReceiverModel.POWER_SPLITTING, ReceiverModel.TIME_SWITCHING)
        )
        worst = max(worst, float(np.max(ps - ideal)), float(np.max(ts - ps)))
    return CheckResult("receiver dominance", worst <= EXACT_TOLERANCE, max(worst, 0.0))


def check_submodularity(rng: np.random.Generator, instances: int) -> CheckResult:
    """Per-state subset capacities are submodular."""
    failures = 0
    for _ in range(instances):
        num_users = int(rng.integers(1, 4))
        model = ReceiverModel(rng.choice([m.value for m in ReceiverModel]))
        caps = subset_capacities(
            rng.uniform(0.1, 5.0, num_users), rng.uniform(0.0, 20.0, num_users), 1.0,
            model, float(rng.uniform(0.0, 0.9)),
        )
        if not is_submodular(dict(zip(nonempty_subsets(num_users), caps.tolist()))):
            failures += 1
    return CheckResult("submodularity", failures == 0, float(failures), f"{instances} instances")


def check_ergodic_water_filling() -> CheckResult:
    """Single-user boundary solve reproduces ergodic water-filling."""
    fading = quantize_rayleigh(1.0, 0.25, 5.0)
    scenario = Scenario(
        mean_harvest_tx=np.array([2.0]),
        fading=joint_states([fading]),
        rho=RateVector.zeros(1),
        sigma2=1.0,
        energetics=ReceiverEnergetics(0.0, 0.0, 1.0),
        model=ReceiverModel.IDEAL,
        name="single-user",
    )
    point = dual_solve(scenario, RewardVector([1.0]), SolverOptions(power_rtol=1e-6))
    _, expected = ergodic_water_filling(fading, 2.0, 1.0)
    residual = abs(point.sum_rate - expected)
    return CheckResult("water-filling, ergodic", residual <= REFINED_TOLERANCE, residual)


def check_infeasible_energy() -> CheckResult:
    """A deficit beyond what constant channels can deliver is rejected."""
    scenario = Scenario(
        mean_harvest_tx=np.array([1.0, 1.0]),
        fading=joint_states([MarginalFading.constant(0.5), MarginalFading.constant(0.5)]),
        rho=RateVector.zeros(2),
        sigma2=1.0,
        energetics=ReceiverEnergetics(0.0, 2.0, 1.0),
        model=ReceiverModel.TIME_SWITCHING,
    )
    try:
        dual_solve(scenario, RewardVector.uniform(2))
    except InfeasibleEnergyError as e:
        return CheckResult("infeasible energy detected", True, detail=e.detail)
    return CheckResult("infeasible energy detected", False, detail="a region was returned")


def touching_tolerance(options: SolverOptions) -> float:
    """Slack for regions that may share boundary points.

    Average powers only balance to a relative ``power_rtol``, and a relative
    power error delta moves a normalized weighted rate by at most
    delta / (2 ln 2) bits.
    """
    return REGION_TOLERANCE + options.power_rtol / (2.0 * math.log(2.0))


def support_violation(inner: Sequence[BoundaryPoint], outer: Sequence[BoundaryPoint]) -> float:
    """Largest amount by which an inner point beats an outer boundary in its own direction.

    A boundary point for rewards mu maximizes mu . R over its region, so no
    point of a contained region may exceed it along mu.
    """
    worst = -np.inf
    for boundary in outer:
        mu = boundary.mu.normalized().mu
        level = float(mu @ boundary.avg_rates.rates)
        for point in inner:
            worst = max(worst, float(mu @ point.avg_rates.rates) - level)
    return float(worst) if np.isfinite(worst) else 0.0


def check_regions(
    scenario: Scenario, options: SolverOptions, mu_grid: int = 5
) -> list[CheckResult]:
    """Nesting, minimum rates and the zero-deficit collapse on ``scenario``."""
    results: list[CheckResult] = []
    traces = {
        model: trace_boundary(scenario.with_model(model), mu_grid, options) for model in ReceiverModel
    }
    for inner, outer in (
        (ReceiverModel.TIME_SWITCHING, ReceiverModel.POWER_SPLITTING),
        (ReceiverModel.POWER_SPLITTING, ReceiverModel.IDEAL),
    ):
        violation = support_violation(traces[inner], traces[outer])
        results.append(
            CheckResult(
                f"nesting {inner.value} in {outer.value}",
                violation <= REGION_TOLERANCE and bool(traces[outer]),
                max(violation, 0.0),
                f"{len(traces[inner])} / {len(traces[outer])} points",
            )
        )

    shortfall = 0.0
    infeasible_states = 0
    rho = scenario.rho
    for model, points in traces.items():
        for point in points:
            shortfall = max(shortfall, float(np.max(rho.rates - point.avg_rates.rates)))
            pi_e = point.pi_e if model is not ReceiverModel.IDEAL else 0.0
            for gains, powers in zip(scenario.fading.states, point.policy.powers):
                if not feasible_min_rates(gains, powers, rho, scenario.sigma2, model, pi_e, 1e-9):
                    infeasible_states += 1
    results.append(
        CheckResult("minimum rates met", shortfall <= 1e-9 and infeasible_states == 0,
                    max(shortfall, 0.0), f"{infeasible_states} infeasible states")
    )

    unconstrained = trace_boundary(
        scenario.with_model(ReceiverModel.IDEAL).with_rho(np.zeros(scenario.num_users)), mu_grid, options
    )
    violation = support_violation(traces[ReceiverModel.IDEAL], unconstrained)
    results.append(CheckResult("minimum-rate region inside rho=0 region",
                               violation <= touching_tolerance(options), max(violation, 0.0)))

    collapsed = {
        model: trace_boundary(scenario.with_deficit(0.0).with_model(model), 3, options)
        for model in ReceiverModel
    }
    reference = collapsed[ReceiverModel.IDEAL]
    spread = 0.0
    for model in (ReceiverModel.POWER_SPLITTING, ReceiverModel.TIME_SWITCHING):
        for a, b in zip(reference, collapsed[model]):
            spread = max(spread, float(np.max(np.abs(a.avg_rates.rates - b.avg_rates.rates))))
    results.append(CheckResult("zero deficit collapse", spread <= 1e-9, spread))
    return results


def _guarded(name: str, check: Callable[[], list[CheckResult] | CheckResult]) -> list[CheckResult]:
    try:
        outcome = check()
    except SwiptError as e:
        return [CheckResult(name, False, detail=e.detail)]
    return outcome if isinstance(outcome, list) else [outcome]


def run_suite(
    scenario: Scenario,
    options: SolverOptions,
    instances: int = 1000,
    seed: int = 0,
    mu_grid: int = 5,
) -> ValidationReport:
    """Run every check; region checks use a coarser grid than boundary tracing."""
    rng = np.random.default_rng(seed)
    report = ValidationReport()
    region_options = replace(options, coarse_points=min(options.coarse_points, 11), workers=1)

    for name, check in (
        ("oracle", lambda: check_oracle(rng, instances)),
        ("water-filling, per state", lambda: check_water_filling(rng, min(instances, 200))),
        ("receiver dominance", lambda: check_dominance(rng, instances)),
        ("submodularity", lambda: check_submodularity(rng, min(instances, 200))),
        ("water-filling, ergodic", check_ergodic_water_filling),
        ("infeasible energy detected", check_infeasible_energy),
        ("regions", lambda: check_regions(scenario, region_options, mu_grid)),
    ):
        for result in _guarded(name, check):
            report.add(result)
    return report
