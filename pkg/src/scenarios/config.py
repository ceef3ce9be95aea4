"""Scenario configuration documents.

A scenario is a YAML document with flat keys. Power-like values are either
plain numbers in ``power_unit`` (converted with ``slot_seconds``) or strings
with their own unit. Everything is converted to J/slot when the scenario is
built.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Literal

import numpy as np
import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from src.channel.fading import MarginalFading, joint_states, quantize_rayleigh
from src.channel.region import RateVector, ReceiverEnergetics, ReceiverModel
from src.exceptions import ConfigError, SwiptError
from src.simulation.harvest import HarvestKind
from src.simulation.simulator import Banking, SimulationOptions, SwitchingRule, XiMode
from src.solver.optimizer import Scenario, SolverOptions
from src.utils.units import ENERGY_UNIT, POWER_UNITS, format_joules, to_joules_per_slot

logger = logging.getLogger(__name__)

REFERENCE_CONFIG = Path(__file__).with_name("reference.yaml")

Quantity = float | str

# Fields converted to J/slot
POWER_FIELDS = ("noise_power", "mean_harvest_rx", "mean_consumption_rx")


class FadingSpec(BaseModel):
    """Quantized fading law of one user."""

    kind: Literal["rayleigh", "constant"] = "rayleigh"
    scale: float = Field(1.0, gt=0, description="Rayleigh scale parameter")
    q: float = Field(0.1, gt=0, description="Quantization step")
    h_max: float = Field(5.0, gt=0, description="Largest gain")
    gain: float = Field(1.0, gt=0, description="Gain of a constant channel")

    def marginal(self) -> MarginalFading:
        """Discrete distribution described by this spec."""
        if self.kind == "constant":
            return MarginalFading.constant(self.gain)
        return quantize_rayleigh(self.scale, self.q, self.h_max)


class SolverConfig(BaseModel):
    """Boundary solver settings."""

    mu_grid: int = Field(21, ge=2)
    coarse_points: int = Field(21, ge=1)
    refine_points: int = Field(11, ge=3)
    refine_rounds: int = Field(3, ge=0)
    refine_seeds: int = Field(2, ge=1)
    refine_moves: int = Field(4, ge=0)
    cap_multiplier: float = Field(20.0, gt=1)
    power_rtol: float = Field(1e-4, gt=0)
    max_sweeps: int = Field(50, ge=1)
    damping: float = Field(0.5, gt=0, le=1)
    max_fixed_point_iter: int = Field(100, ge=1)
    fixed_point_tol: float = Field(1e-6, gt=0)
    epsilon_fraction: float = Field(1e-3, ge=0, lt=1)
    lambda_floor: float = Field(1e-9, gt=0)
    workers: int = Field(1, ge=1)

    def options(self) -> SolverOptions:
        """Solver options without the grid count."""
        return SolverOptions(**self.model_dump(exclude={"mu_grid"}))


class SimulationConfig(BaseModel):
    """Monte Carlo settings."""

    horizon: int = Field(1_000_000, ge=1)
    burn_in: int = Field(0, ge=0)
    seed: int = Field(0, ge=0, lt=2**64)
    switching: SwitchingRule = SwitchingRule.BERNOULLI
    xi_mode: XiMode = XiMode.SAMPLED
    ps_banking: Banking = Banking.AS_WRITTEN
    initial_tx_buffer: Quantity = 0.0
    initial_rx_buffer: Quantity | None = None
    trace_slots: int = Field(0, ge=0)
    checkpoints: list[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_burn_in(self) -> "SimulationConfig":
        """Burn-in must leave slots to measure."""
        if self.burn_in >= self.horizon:
            raise ValueError(f"burn_in ({self.burn_in}) must be below horizon ({self.horizon})")
        return self


class ScenarioConfig(BaseModel):
    """Scenario document."""

    name: str = "scenario"
    num_users: int = Field(..., ge=1, le=16)
    model: ReceiverModel = ReceiverModel.POWER_SPLITTING
    power_unit: str = "W"
    slot_seconds: float = Field(1e-6, gt=0)
    mean_harvest_tx: list[Quantity]
    noise_power: Quantity
    mean_harvest_rx: Quantity = 0.0
    mean_consumption_rx: Quantity = 0.0
    eta: float = Field(..., gt=0, le=1)
    rho: list[float]
    fading: FadingSpec | list[FadingSpec] | None = None
    fading_support: list[list[float]] | None = None
    fading_pmf: list[list[float]] | None = None
    harvest_kind_tx: HarvestKind = HarvestKind.EXPONENTIAL
    harvest_kind_rx: HarvestKind = HarvestKind.EXPONENTIAL
    consumption_kind_rx: HarvestKind = HarvestKind.CONSTANT
    solver: SolverConfig = Field(default_factory=SolverConfig)
    simulation: SimulationConfig = Field(default_factory=SimulationConfig)

    @field_validator("power_unit")
    @classmethod
    def validate_power_unit(cls, v: str) -> str:
        """Only known power units, or J for energies per slot."""
        if v != ENERGY_UNIT and v not in POWER_UNITS:
            raise ValueError(
                f"Invalid power_unit '{v}'. Valid options: {', '.join([*POWER_UNITS, ENERGY_UNIT])}"
            )
        return v

    @field_validator("rho")
    @classmethod
    def validate_rho(cls, v: list[float]) -> list[float]:
        """Minimum rates are nonnegative."""
        if any(r < 0 for r in v):
            raise ValueError("Minimum rates must be nonnegative")
        return v

    @model_validator(mode="after")
    def validate_users(self) -> "ScenarioConfig":
        """Every per-user array has num_users entries."""
        sizes = {"mean_harvest_tx": len(self.mean_harvest_tx), "rho": len(self.rho)}
        if isinstance(self.fading, list):
            sizes["fading"] = len(self.fading)
        if self.fading_support is not None:
            sizes["fading_support"] = len(self.fading_support)
        if self.fading_pmf is not None:
            sizes["fading_pmf"] = len(self.fading_pmf)
        for key, size in sizes.items():
            if size != self.num_users:
                raise ValueError(f"{key} has {size} entries, expected num_users={self.num_users}")

        explicit = self.fading_support is not None or self.fading_pmf is not None
        if explicit and self.fading is not None:
            raise ValueError("Give either fading or fading_support/fading_pmf, not both")
        if explicit and (self.fading_support is None or self.fading_pmf is None):
            raise ValueError("fading_support and fading_pmf must be given together")
        return self

    def joules(self, value: Quantity) -> float:
        """Convert one power-like value to J/slot."""
        return to_joules_per_slot(value, self.power_unit, self.slot_seconds)

    def marginals(self) -> list[MarginalFading]:
        """Per-user fading distributions."""
        if self.fading_support is not None and self.fading_pmf is not None:
            return [
                MarginalFading(support=np.array(s), pmf=np.array(p))
                for s, p in zip(self.fading_support, self.fading_pmf)
            ]
        specs = self.fading if self.fading is not None else FadingSpec()
        if isinstance(specs, FadingSpec):
            return [specs.marginal()] * self.num_users
        return [spec.marginal() for spec in specs]

    def to_scenario(self) -> Scenario:
        """Build the J/slot scenario."""
        return Scenario(
            mean_harvest_tx=np.array([self.joules(v) for v in self.mean_harvest_tx]),
            fading=joint_states(self.marginals()),
            rho=RateVector(np.array(self.rho, dtype=float)),
            sigma2=self.joules(self.noise_power),
            energetics=ReceiverEnergetics(
                mean_harvest_rx=self.joules(self.mean_harvest_rx),
                mean_consumption_rx=self.joules(self.mean_consumption_rx),
                eta=self.eta,
            ),
            model=self.model,
            name=self.name,
        )

    def solver_options(self) -> SolverOptions:
        """Solver tuning."""
        return self.solver.options()

    def simulation_options(self) -> SimulationOptions:
        """Simulator knobs, energies in J."""
        sim = self.simulation
        return SimulationOptions(
            switching=sim.switching,
            xi_mode=sim.xi_mode,
            ps_banking=sim.ps_banking,
            harvest_kind_tx=self.harvest_kind_tx,
            harvest_kind_rx=self.harvest_kind_rx,
            consumption_kind_rx=self.consumption_kind_rx,
            initial_tx_buffer=self.joules(sim.initial_tx_buffer),
            initial_rx_buffer=(
                self.joules(sim.initial_rx_buffer) if sim.initial_rx_buffer is not None else None
            ),
            trace_slots=sim.trace_slots,
            checkpoints=tuple(sim.checkpoints),
        )

    def canonical(self) -> dict[str, Any]:
        """JSON-compatible form with every energy written in J/slot."""
        data = self.model_dump(mode="json")
        data["mean_harvest_tx"] = [format_joules(self.joules(v)) for v in self.mean_harvest_tx]
        for key in POWER_FIELDS:
            data[key] = format_joules(self.joules(getattr(self, key)))
        sim = data["simulation"]
        sim["initial_tx_buffer"] = format_joules(self.joules(self.simulation.initial_tx_buffer))
        if self.simulation.initial_rx_buffer is not None:
            sim["initial_rx_buffer"] = format_joules(self.joules(self.simulation.initial_rx_buffer))
        return data

    def config_hash(self) -> str:
        """SHA-256 of the canonical document."""
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def parse_config(data: Any, path: str | None = None) -> ScenarioConfig:
    """Validate a loaded document and check it builds a scenario."""
    if not isinstance(data, dict):
        raise ConfigError("document must be a mapping of keys to values", path)
    try:
        config = ScenarioConfig.model_validate(data)
        config.to_scenario()
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(problems, path) from e
    except SwiptError as e:
        raise ConfigError(e.detail, path) from e
    return config


def load_config(path: Path | str) -> ScenarioConfig:
    """Load and validate a YAML scenario file."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except FileNotFoundError as e:
        raise ConfigError("file not found", str(path)) from e
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML: {e}", str(path)) from e
    config = parse_config(data, str(path))
    logger.debug("Loaded scenario '%s' from %s", config.name, path)
    return config


def load_reference() -> ScenarioConfig:
    """The bundled reference scenario."""
    return load_config(REFERENCE_CONFIG)


def dump_config(config: ScenarioConfig) -> str:
    """Canonical YAML text of a scenario."""
    return yaml.safe_dump(config.canonical(), sort_keys=False)
