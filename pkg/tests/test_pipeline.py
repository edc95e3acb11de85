"""End-to-end analysis tests on small datasets."""
import numpy as np
import pytest

from dmaps.errors import InvalidParameter
from dmaps.geometry import ObservationSet
from dmaps.models import Metric, ObservationKind, PipelineConfig, SelectionCriterion
from dmaps.pipeline import Dataset, analyze_safely, generate_dataset, run_analysis

DENSE = {"eigen_solver": "dense", "num_eigen": 8}


@pytest.fixture
def strip_dataset():
    return generate_dataset("strip", {"l1": 4.0, "l2": 1.0, "m": 300}, seed=3)


@pytest.fixture
def small_chemotaxis():
    params = {"n_cells": 200, "speed": 1.0, "switch_rate": 1.0, "t_max": 10.0, "dt": 1.0, "runs": 10}
    return generate_dataset("chemotaxis", params, seed=1)


# =============================================================================
# Dataset generation
# =============================================================================

def test_generate_echoes_parameters(strip_dataset):
    assert strip_dataset.m == 300
    assert strip_dataset.params["l1"] == 4.0
    assert strip_dataset.params["density"] == "uniform"
    assert list(strip_dataset.latent.columns) == ["z1", "z2"]


def test_generate_defaults():
    dataset = generate_dataset("torus", {"m": 50}, seed=0)
    assert dataset.params == {"r1": 10.0, "r2": 1.0, "m": 50}
    assert dataset.observations.n == 3


def test_generate_unknown_kind():
    with pytest.raises(InvalidParameter):
        generate_dataset("sphere")


def test_generate_chemotaxis(small_chemotaxis):
    assert small_chemotaxis.observations.kind == ObservationKind.HISTOGRAMS
    assert small_chemotaxis.observations.vectors.shape == (100, 32)
    assert len(small_chemotaxis.bin_edges) == 33
    assert list(small_chemotaxis.latent.columns) == ["p", "t", "flux_gap"]
    assert len(small_chemotaxis.params["p_values"]) == 10


def test_config_hash_tracks_inputs(strip_dataset):
    other = generate_dataset("strip", {"l1": 4.0, "l2": 1.0, "m": 300}, seed=4)
    assert strip_dataset.config_hash() == generate_dataset("strip", {"l1": 4.0, "l2": 1.0, "m": 300}, seed=3).config_hash()
    assert strip_dataset.config_hash() != other.config_hash()


# =============================================================================
# Analysis
# =============================================================================

def test_strip_report_contents(strip_dataset):
    outcome = run_analysis(strip_dataset, PipelineConfig(**DENSE))
    report = outcome.report
    assert len(report.spectrum) == 8
    assert report.spectrum[0] == pytest.approx(1.0)
    assert report.residuals.residual(1) == 1.0
    assert 1 in report.unique_indices
    assert len(report.analytic_spectrum) == 8
    assert report.correlations is None
    assert set(report.latent_correlations) == {"z1", "z2"}
    assert report.provenance.config_hash and report.provenance.dataset_hash
    assert outcome.full_embedding.coords.shape == (300, 7)
    assert outcome.reduced_embedding.selected_indices == tuple(report.unique_indices)


def test_first_coordinate_tracks_long_axis(strip_dataset):
    report = run_analysis(strip_dataset, PipelineConfig(**DENSE)).report
    assert report.latent_correlations["z1"]["phi_1"] > 0.95


def test_nothing_selected_falls_back(strip_dataset):
    config = PipelineConfig(selection=SelectionCriterion.by_threshold(1.5), **DENSE)
    outcome = run_analysis(strip_dataset, config)
    assert outcome.report.unique_indices == []
    assert outcome.reduced_embedding.selected_indices == (1,)
    assert outcome.report.ratio_from_fallback
    assert any("no eigendirection" in message for message in outcome.report.warnings)
    assert outcome.report.relative_lengths == []


def test_partial_density_normalization_warns(strip_dataset):
    report = run_analysis(strip_dataset, PipelineConfig(alpha=0.5, **DENSE)).report
    assert any("uniform sampling" in message for message in report.warnings)


def test_fixed_epsilon_is_used(strip_dataset):
    report = run_analysis(strip_dataset, PipelineConfig(epsilon=0.7, **DENSE)).report
    assert report.epsilon == 0.7


def test_analysis_is_permutation_invariant(strip_dataset, rng):
    perm = rng.permutation(strip_dataset.m)
    shuffled = Dataset(
        kind="strip",
        observations=ObservationSet(strip_dataset.observations.vectors[perm]),
        params=strip_dataset.params,
        latent=strip_dataset.latent.iloc[perm].reset_index(drop=True),
    )
    base = run_analysis(strip_dataset, PipelineConfig(**DENSE)).report
    moved = run_analysis(shuffled, PipelineConfig(**DENSE)).report
    assert base.unique_indices == moved.unique_indices
    assert np.allclose(base.spectrum, moved.spectrum, atol=1e-10)
    assert np.allclose(base.residuals.residuals, moved.residuals.residuals, atol=1e-6)
    for name, row in base.latent_correlations.items():
        for column, value in row.items():
            assert moved.latent_correlations[name][column] == pytest.approx(value, abs=1e-6)


def test_chemotaxis_report_has_correlations(small_chemotaxis):
    report = run_analysis(small_chemotaxis, PipelineConfig(metric=Metric.EMD, **DENSE)).report
    assert report.correlations is not None
    assert set(report.correlations.assignment) == {"p", "t"}
    assert 0.0 < report.dimensionality_ratio <= 1.0


def test_analyze_safely_swallows_config_errors(strip_dataset):
    assert analyze_safely(strip_dataset, PipelineConfig(metric=Metric.EMD)) is None
