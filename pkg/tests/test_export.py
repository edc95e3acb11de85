"""Tests for the CSV/JSON writers and readers."""
import json

import numpy as np
import pandas as pd
import pytest

from dmaps.errors import SchemaMismatch
from dmaps.export import ResultExporter, load_dataset, load_report, load_table
from dmaps.models import ObservationKind, PipelineConfig
from dmaps.pipeline import generate_dataset, run_analysis


@pytest.fixture
def exporter(tmp_path):
    return ResultExporter(str(tmp_path))


def test_dataset_round_trip_is_lossless(exporter):
    dataset = generate_dataset("swissroll", {"m": 40}, seed=2)
    paths = exporter.export_dataset(dataset, "roll")
    loaded = load_dataset(paths["csv"])

    assert loaded.kind == "swissroll"
    assert np.array_equal(loaded.observations.vectors, dataset.observations.vectors)
    assert np.array_equal(loaded.latent.to_numpy(), dataset.latent.to_numpy())
    assert loaded.params == dataset.params
    assert loaded.dataset_hash == dataset.dataset_hash


def test_dataset_csv_layout(exporter):
    dataset = generate_dataset("strip", {"m": 5}, seed=0)
    paths = exporter.export_dataset(dataset, "strip")
    frame = pd.read_csv(paths["csv"])
    assert list(frame.columns) == ["z_1", "z_2", "latent_z1", "latent_z2", "config_hash", "seed"]
    meta = json.loads(paths["json"].read_text())
    assert meta["schema_version"] == 1
    assert meta["n_rows"] == 5
    assert meta["config_hash"] == dataset.config_hash()


def test_histogram_dataset_round_trip(exporter):
    params = {"n_cells": 50, "speed": 1.0, "switch_rate": 1.0, "t_max": 2.0, "dt": 1.0, "runs": 2, "n_bins": 8}
    dataset = generate_dataset("chemotaxis", params, seed=0)
    loaded = load_dataset(exporter.export_dataset(dataset, "chemo")["csv"])
    assert loaded.observations.kind == ObservationKind.HISTOGRAMS
    assert np.array_equal(loaded.run_ids, dataset.run_ids)
    assert np.array_equal(loaded.bin_edges, dataset.bin_edges)


def test_dataset_without_sidecar_is_custom(tmp_path):
    path = tmp_path / "points.csv"
    pd.DataFrame({"x": [0.0, 1.0, 2.0], "y": [1.0, 0.5, 0.0]}).to_csv(path, index=False)
    loaded = load_dataset(path)
    assert loaded.kind == "custom"
    assert loaded.observations.vectors.shape == (3, 2)
    assert loaded.latent is None


def test_analysis_outputs(exporter):
    dataset = generate_dataset("strip", {"l1": 2.0, "m": 120}, seed=1)
    outcome = run_analysis(dataset, PipelineConfig(num_eigen=5, eigen_solver="dense"))
    paths = exporter.export_analysis(outcome, "strip")

    assert set(paths) == {"report", "embedding_full", "embedding_reduced", "spectrum", "analytic"}
    spectrum = load_table(paths["spectrum"])
    assert list(spectrum.columns) == ["k", "mu", "r", "unique"]
    assert spectrum["mu"].tolist() == outcome.report.spectrum[1:]
    full = load_table(paths["embedding_full"])
    assert np.array_equal(full.to_numpy(), outcome.full_embedding.coords)
    assert load_report(paths["report"]) == outcome.report


def test_report_schema_mismatch(tmp_path):
    path = tmp_path / "old_report.json"
    path.write_text(json.dumps({"schema_version": 99}))
    with pytest.raises(SchemaMismatch) as excinfo:
        load_report(path)
    assert excinfo.value.expected == 1
    assert excinfo.value.found == 99
