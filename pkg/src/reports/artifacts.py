"""CSV tables and the run manifest."""

import csv
import json
import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from src import __version__
from src.channel.fading import JointFadeTable
from src.channel.region import ReceiverModel, ergodic_bounds, nonempty_subsets
from src.scenarios.config import ScenarioConfig
from src.simulation.simulator import SimStats, trace_header
from src.solver.optimizer import BoundaryPoint

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
SWEEP_MODELS = (ReceiverModel.IDEAL, ReceiverModel.POWER_SPLITTING, ReceiverModel.TIME_SWITCHING)

Cell = float | int | str | None


def format_cell(value: Cell) -> str:
    """Locale-independent cell text; numbers keep 9 significant digits."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


@dataclass
class RunArtifacts:
    """Files written by one command."""

    out_dir: Path
    files: list[Path] = field(default_factory=list)

    def __post_init__(self) -> None:
        """Create the output directory."""
        self.out_dir = Path(self.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        """Path of an artifact inside the run directory."""
        return self.out_dir / name

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Cell]]) -> Path:
        """Write a CSV with a header row and fixed column order."""
        path = self.path(name)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                if len(row) != len(header):
                    raise ValueError(f"{name}: row has {len(row)} cells, header has {len(header)}")
                writer.writerow([format_cell(v) for v in row])
        self.add(path)
        return path

    def add(self, path: Path) -> None:
        """Record an artifact written elsewhere."""
        if path not in self.files:
            self.files.append(path)
        logger.info("Wrote %s", path)

    def write_manifest(self, config: ScenarioConfig, command: str, seed: int | None = None) -> Path:
        """Record the config hash, seed, tool version and produced files."""
        manifest = {
            "command": command,
            "scenario": config.name,
            "config_hash": config.config_hash(),
            "seed": seed,
            "version": __version__,
            "files": sorted(p.name for p in self.files),
        }
        path = self.path(MANIFEST_NAME)
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def boundary_header(num_users: int) -> list[str]:
    """Columns of a boundary table."""
    users = range(1, num_users + 1)
    return [
        "theta",
        *(f"mu{i}" for i in users),
        *(f"R{i}" for i in users),
        "pi_e",
        *(f"lambda{i}" for i in users),
        "lambda_r",
    ]


def boundary_rows(points: Sequence[BoundaryPoint]) -> list[list[Cell]]:
    """One row per boundary point; theta is the first user's normalized reward."""
    rows: list[list[Cell]] = []
    for point in points:
        mu = point.mu.normalized().mu
        rows.append(
            [
                float(mu[0]),
                *(float(m) for m in point.mu.mu),
                *(float(r) for r in point.avg_rates.rates),
                float(point.pi_e),
                *(float(v) for v in point.multipliers.lambda_tx),
                float(point.multipliers.lambda_rx),
            ]
        )
    return rows


def subset_label(subset: frozenset[int]) -> str:
    """Column name of a subset bound, e.g. ``C_1_2``."""
    return "C_" + "_".join(str(i + 1) for i in sorted(subset))


def bounds_rows(
    points: Sequence[BoundaryPoint], table: JointFadeTable, sigma2: float
) -> tuple[list[str], list[list[Cell]]]:
    """Ergodic subset bounds of every boundary policy."""
    subsets = nonempty_subsets(table.num_users)
    header = ["theta", *(subset_label(s) for s in subsets)]
    rows: list[list[Cell]] = []
    for point in points:
        bounds = ergodic_bounds(point.policy, table, sigma2, point.model, point.pi_e)
        theta = float(point.mu.normalized().mu[0])
        rows.append([theta, *(float(bounds[s]) for s in subsets)])
    return header, rows


def write_boundary(artifacts: RunArtifacts, label: str, points: Sequence[BoundaryPoint]) -> Path:
    """``boundary_<label>.csv``."""
    num_users = int(points[0].avg_rates.rates.size) if points else 2
    return artifacts.write_csv(f"boundary_{label}.csv", boundary_header(num_users), boundary_rows(points))


def write_sweep(
    artifacts: RunArtifacts,
    params: Sequence[float],
    sums: dict[ReceiverModel, list[float | None]],
    name: str = "sweep.csv",
) -> Path:
    """Sum rates per swept value; infeasible points are empty cells."""
    header = ["param", *(f"sum_rate_{m.value}" for m in SWEEP_MODELS)]
    rows = [
        [float(p), *(sums.get(m, [None] * len(params))[k] for m in SWEEP_MODELS)]
        for k, p in enumerate(params)
    ]
    return artifacts.write_csv(name, header, rows)


def comparison_rows(point: BoundaryPoint, stats: SimStats, deficit: float) -> list[list[Cell]]:
    """Analytic against empirical quantities of one simulation."""
    rows: list[list[Cell]] = [
        ["pi_e", "", float(point.pi_e), float(stats.erasure_fraction)],
        ["delivered_rf", "", float(point.delivered), float(stats.avg_rf_incident)],
        ["banked_rf", "", float(deficit), float(stats.avg_delivered)],
        ["rx_outage", "", 0.0, float(stats.rx_outage_fraction)],
    ]
    for i in range(point.avg_rates.rates.size):
        user = i + 1
        rows.append(["avg_power", user, float(point.avg_powers[i]), float(stats.avg_tx_power[i])])
        rows.append(["rate", user, float(point.avg_rates.rates[i]), float(stats.achieved_rate_estimate[i])])
        rows.append(["clip_fraction", user, 0.0, float(stats.tx_clip_fraction[i])])
        rows.append(["final_tx_buffer", user, None, float(stats.final_tx_buffers[i])])
    for slot in sorted(stats.checkpoints):
        for i, level in enumerate(stats.checkpoints[slot]):
            rows.append([f"tx_buffer@{slot}", i + 1, None, float(level)])
        for i, fraction in enumerate(stats.checkpoint_clips.get(slot, ())):
            rows.append([f"clip_fraction@{slot}", i + 1, None, float(fraction)])
    return rows


COMPARISON_HEADER = ["quantity", "user", "analytic", "empirical"]


def write_simulation(
    artifacts: RunArtifacts, label: str, point: BoundaryPoint, stats: SimStats, deficit: float
) -> list[Path]:
    """``simulation_<label>.csv`` and, when traced, ``trace_<label>.csv``."""
    paths = [
        artifacts.write_csv(
            f"simulation_{label}.csv", COMPARISON_HEADER, comparison_rows(point, stats, deficit)
        )
    ]
    if stats.trace:
        num_users = int(stats.avg_tx_power.size)
        paths.append(artifacts.write_csv(f"trace_{label}.csv", trace_header(num_users), stats.trace))
    return paths
