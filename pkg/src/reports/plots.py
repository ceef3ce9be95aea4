"""Self-contained SVG figures."""

import logging
from collections.abc import Mapping, Sequence
from pathlib import Path

import matplotlib
from matplotlib.figure import Figure

logger = logging.getLogger(__name__)

RATE_LABEL = "bits/channel use"
# Fixed ids and no timestamp keep reruns byte-identical
SVG_RC = {"svg.hashsalt": "swipt-mac-regions", "svg.fonttype": "path"}
SVG_METADATA = {"Date": None}


def _save(fig: Figure, path: Path) -> Path:
    with matplotlib.rc_context(SVG_RC):
        fig.savefig(path, format="svg", metadata=SVG_METADATA, bbox_inches="tight")
    logger.debug("Wrote %s", path)
    return path


def plot_regions(
    curves: Mapping[str, Sequence[tuple[float, float]]],
    path: Path,
    title: str = "Capacity regions",
) -> Path:
    """Overlay two-user boundaries, each closed down to the axes.

    Args:
        curves: Label to boundary points (R1, R2), in tracing order
        path: Output file
        title: Figure title

    Returns:
        The written path
    """
    fig = Figure(figsize=(6.0, 5.0))
    ax = fig.subplots()
    for label, points in curves.items():
        if not points:
            continue
        ordered = sorted(points, key=lambda p: (p[0], -p[1]))
        r1 = [p[0] for p in ordered]
        r2 = [p[1] for p in ordered]
        # Drop to the axes so the region reads as a closed set
        ax.plot([0.0, *r1, r1[-1]], [r2[0], *r2, 0.0], label=label)
    ax.set_xlabel(f"R1 ({RATE_LABEL})")
    ax.set_ylabel(f"R2 ({RATE_LABEL})")
    ax.set_xlim(left=0.0)
    ax.set_ylim(bottom=0.0)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    return _save(fig, path)


def plot_sweep(
    params: Sequence[float],
    series: Mapping[str, Sequence[float | None]],
    path: Path,
    xlabel: str,
    title: str = "Sum rate",
) -> Path:
    """Sum rate against a swept parameter, one line per receiver."""
    fig = Figure(figsize=(6.0, 4.5))
    ax = fig.subplots()
    for label, values in series.items():
        xs = [x for x, y in zip(params, values) if y is not None]
        ys = [y for y in values if y is not None]
        ax.plot(xs, ys, marker="o", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(f"Sum rate ({RATE_LABEL})")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    return _save(fig, path)
