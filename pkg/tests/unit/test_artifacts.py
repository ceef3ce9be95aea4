"""Unit tests for CSV tables, the manifest and the SVG figures."""

import csv
import json

import numpy as np
import pytest

from src import __version__
from src.channel.fading import MarginalFading, joint_states
from src.channel.region import PolicyTable, RateVector, ReceiverModel
from src.reports.artifacts import (
    COMPARISON_HEADER,
    RunArtifacts,
    boundary_header,
    bounds_rows,
    comparison_rows,
    format_cell,
    subset_label,
    write_boundary,
    write_simulation,
    write_sweep,
)
from src.reports.plots import plot_regions, plot_sweep
from src.simulation.simulator import SimStats
from src.solver.optimizer import BoundaryPoint, Multipliers, RewardVector


def read_csv(path):
    """Rows of a CSV file, header included."""
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


@pytest.fixture
def table():
    """Two users with constant gains."""
    return joint_states([MarginalFading.constant(1.0), MarginalFading.constant(3.0)])


@pytest.fixture
def point(table):
    """A hand-built power-splitting boundary point."""
    return BoundaryPoint(
        mu=RewardVector(np.array([1.0, 3.0])),
        avg_rates=RateVector(np.array([0.25, 0.5])),
        policy=PolicyTable(np.array([[1.0, 1.0]]), rates=np.array([[0.25, 0.5]])),
        multipliers=Multipliers(np.array([0.2, 0.3]), 0.01),
        pi_e=0.1,
        delivered=2.0,
        model=ReceiverModel.POWER_SPLITTING,
        avg_powers=np.array([1.0, 1.0]),
    )


@pytest.fixture
def stats():
    """Simulation statistics with one checkpoint and a short trace."""
    return SimStats(
        slots=100,
        erasure_fraction=0.11,
        avg_tx_power=np.array([0.99, 1.01]),
        avg_delivered=0.2,
        avg_rf_incident=1.9,
        rx_outage_fraction=0.0,
        tx_clip_fraction=np.array([0.01, 0.0]),
        final_tx_buffers=np.array([0.5, 0.25]),
        final_rx_buffer=0.1,
        achieved_rate_estimate=np.array([0.24, 0.51]),
        checkpoints={50: np.array([0.4, 0.3])},
        checkpoint_clips={50: np.array([0.02, 0.0])},
        trace=[[0, 0, 1.0, 1.0, 0, 0, 0.0, 0.0, 0.1, 2.0, 0]],
    )


class TestFormatCell:
    """Test cases for cell formatting."""

    @pytest.mark.parametrize(
        "value,expected",
        [(None, ""), (True, "1"), (3, "3"), (0.1 + 0.2, "0.3"), (1.0 / 3.0, "0.333333333"), ("x", "x")],
    )
    def test_cells(self, value, expected):
        """Floats keep nine significant digits."""
        assert format_cell(value) == expected


class TestRunArtifacts:
    """Test cases for RunArtifacts."""

    def test_write_csv(self, tmp_path):
        """Header first, then formatted rows."""
        artifacts = RunArtifacts(tmp_path / "run")
        path = artifacts.write_csv("t.csv", ["a", "b"], [[1, 0.5], [None, "z"]])
        assert read_csv(path) == [["a", "b"], ["1", "0.5"], ["", "z"]]
        assert artifacts.files == [path]

    def test_row_length_checked(self, tmp_path):
        """Rows must match the header."""
        artifacts = RunArtifacts(tmp_path)
        with pytest.raises(ValueError):
            artifacts.write_csv("t.csv", ["a", "b"], [[1]])

    def test_manifest(self, tmp_path, tiny_config):
        """Manifest records hash, seed, version and files."""
        artifacts = RunArtifacts(tmp_path)
        artifacts.write_csv("t.csv", ["a"], [[1]])
        manifest = json.loads(artifacts.write_manifest(tiny_config, "region", 7).read_text())
        assert manifest["config_hash"] == tiny_config.config_hash()
        assert manifest["seed"] == 7
        assert manifest["version"] == __version__
        assert manifest["files"] == ["t.csv"]
        assert manifest["scenario"] == "tiny"


class TestTables:
    """Test cases for the table builders."""

    def test_boundary(self, tmp_path, point):
        """theta is the normalized first reward."""
        path = write_boundary(RunArtifacts(tmp_path), "ps", [point])
        rows = read_csv(path)
        assert rows[0] == boundary_header(2)
        assert rows[0] == ["theta", "mu1", "mu2", "R1", "R2", "pi_e", "lambda1", "lambda2", "lambda_r"]
        assert rows[1][0] == "0.25"
        assert rows[1][3:6] == ["0.25", "0.5", "0.1"]

    def test_subset_label(self):
        """Subsets are named with one-based users."""
        assert subset_label(frozenset({0, 1})) == "C_1_2"

    def test_bounds(self, point, table):
        """Ergodic bounds per boundary policy."""
        header, rows = bounds_rows([point], table, 1.0)
        assert header == ["theta", "C_1", "C_2", "C_1_2"]
        expected = 0.5 * np.log2(1.0 + 0.9 * 4.0)
        assert rows[0][3] == pytest.approx(expected)

    def test_sweep(self, tmp_path):
        """Missing models and infeasible points are empty cells."""
        sums = {ReceiverModel.IDEAL: [1.0, None]}
        rows = read_csv(write_sweep(RunArtifacts(tmp_path), [0.0, 1e-11], sums))
        assert rows[0] == ["param", "sum_rate_ideal", "sum_rate_ps", "sum_rate_ts"]
        assert rows[1] == ["0", "1", "", ""]
        assert rows[2] == ["1e-11", "", "", ""]

    def test_simulation(self, tmp_path, point, stats):
        """Comparison and trace files are written."""
        paths = write_simulation(RunArtifacts(tmp_path), "ps", point, stats, 0.2)
        assert [p.name for p in paths] == ["simulation_ps.csv", "trace_ps.csv"]
        rows = read_csv(paths[0])
        assert rows[0] == COMPARISON_HEADER
        assert ["pi_e", "", "0.1", "0.11"] in rows
        assert ["tx_buffer@50", "2", "", "0.3"] in rows
        assert ["clip_fraction@50", "1", "", "0.02"] in rows

    def test_comparison_users(self, point, stats):
        """Per-user quantities are listed for every user."""
        rows = comparison_rows(point, stats, 0.2)
        assert {row[1] for row in rows if row[0] == "rate"} == {1, 2}


class TestPlots:
    """Test cases for SVG figures."""

    def test_regions_svg(self, tmp_path):
        """Region plots are SVG without a timestamp."""
        path = plot_regions({"PS": [(0.0, 1.0), (0.6, 0.8), (1.0, 0.0)]}, tmp_path / "r.svg")
        text = path.read_text(encoding="utf-8")
        assert text.lstrip().startswith("<?xml")
        assert "<svg" in text
        assert "<dc:date>" not in text

    def test_regions_deterministic(self, tmp_path):
        """Reruns are byte-identical."""
        curves = {"Ideal": [(0.2, 1.0), (1.0, 0.3)], "TS": [(0.1, 0.5), (0.5, 0.1)]}
        a = plot_regions(curves, tmp_path / "a.svg").read_bytes()
        b = plot_regions(curves, tmp_path / "b.svg").read_bytes()
        assert a == b

    def test_sweep_skips_missing(self, tmp_path):
        """None values are left out of the line."""
        path = plot_sweep([0.0, 1.0, 2.0], {"PS": [1.0, None, 0.5]}, tmp_path / "s.svg", "deficit")
        assert path.exists()
