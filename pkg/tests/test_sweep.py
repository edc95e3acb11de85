"""Tests for the (switch rate, observation time) dimensionality sweep."""
import numpy as np
import pytest

from dmaps.errors import InvalidParameter
from dmaps.models import Metric, PipelineConfig, SweepGrid
from dmaps.pipeline import generate_dataset, run_analysis
from dmaps.presets import get_preset
from dmaps.sweep import dimensionality_sweep, sweep_cell_params, transition_curve, transition_level_set


def handmade_grid(ratios) -> SweepGrid:
    lambdas = [1.0] * len(ratios)
    t_obs = [0.01, 0.1, 1.0]
    return SweepGrid(
        lambdas=lambdas,
        t_obs_values=t_obs,
        ratios=ratios,
        replicate_ratios=[[[r] for r in row] for row in ratios],
        warnings=[[False] * len(t_obs) for _ in ratios],
        replicates=1,
        n_cells=1000,
        boundary=[1.0] * len(ratios),
    )


def test_cell_params_keep_unit_diffusivity():
    params = sweep_cell_params(4.0, 0.01, 1000, 10, 32)
    assert params["speed"] ** 2 / params["switch_rate"] == pytest.approx(1.0)
    assert params["t_max"] == pytest.approx(10.0)
    assert params["dt"] == pytest.approx(1.0)


def test_transition_curve():
    assert np.allclose(transition_curve([0.5, 2.0, 10.0]), [2.0, 0.5, 0.1])


def test_transition_curve_rejects_zero():
    with pytest.raises(InvalidParameter):
        transition_curve([0.0, 1.0])


def test_level_set_interpolates_in_log_time():
    crossings = transition_level_set(handmade_grid([[0.9, 0.7, 0.3], [0.9, 0.8, 0.6], [0.4, 0.3, 0.2]]))
    assert crossings[0] == pytest.approx(np.sqrt(0.1))
    assert np.isnan(crossings[1])
    assert crossings[2] == pytest.approx(0.01)


def test_level_set_skips_missing_cells():
    crossings = transition_level_set(handmade_grid([[0.9, None, 0.3]]))
    assert crossings[0] == pytest.approx(np.exp(np.log(0.01) + (2.0 / 3.0) * (np.log(1.0) - np.log(0.01))))


@pytest.mark.parametrize("kwargs", [
    {"lambdas": []}, {"t_obs_values": []}, {"lambdas": [-1.0]}, {"replicates": 0},
])
def test_sweep_rejects_invalid_grids(kwargs):
    with pytest.raises(InvalidParameter):
        dimensionality_sweep(**{"lambdas": [1.0], "t_obs_values": [0.01], **kwargs})


def test_single_cell_matches_direct_analysis():
    grid = dimensionality_sweep([1.0], [0.05], replicates=1, n_cells=200, runs=10, seed=5)
    dataset = generate_dataset("chemotaxis", sweep_cell_params(1.0, 0.05, 200, 10, 32), seed=5)
    report = run_analysis(dataset, PipelineConfig(metric=Metric.EMD)).report

    assert report.dimensionality_ratio is not None
    assert grid.ratios[0][0] == pytest.approx(report.dimensionality_ratio, rel=1e-12)
    assert grid.replicate_ratios[0][0] == [grid.ratios[0][0]]
    assert grid.warnings[0][0] == report.ratio_from_fallback
    assert grid.boundary == [1.0]
    assert grid.provenance is not None


@pytest.mark.slow
def test_desk_grid_shows_transition():
    params = get_preset("sweep-desk")["params"]
    grid = dimensionality_sweep(n_jobs=-1, **params)
    ratios = np.array(grid.ratios, dtype=float)

    assert np.all((ratios > 0) & (ratios <= 1.0))
    assert ratios[0, 0] > ratios[-1, -1]
    for row in ratios:
        assert np.all(np.diff(row) <= 0.05)

    step = np.log(grid.t_obs_values[1]) - np.log(grid.t_obs_values[0])
    lowest, highest = min(grid.t_obs_values), max(grid.t_obs_values)
    for lam, crossing, boundary in zip(grid.lambdas, grid.level_set, grid.boundary):
        if lowest <= boundary <= highest:
            assert crossing is not None, f"lambda={lam}: ratio never drops below 0.5 inside the grid"
        if crossing is not None and boundary <= highest:
            assert abs(np.log(crossing) - np.log(boundary)) <= step + 1e-12
