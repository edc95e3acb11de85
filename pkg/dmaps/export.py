"""
Result Export Module - writes datasets, analysis reports and sweep grids to CSV/JSON
"""
import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Dict, Optional

import numpy as np
import pandas as pd

from dmaps.errors import InvalidData, SchemaMismatch
from dmaps.geometry import ObservationSet
from dmaps.models import SCHEMA_VERSION, AnalysisReport, DatasetMeta, ObservationKind, SweepGrid
from dmaps.pipeline import AnalysisOutcome, Dataset
from dmaps.preprocess import HistogramObserver
from dmaps.spectral import Embedding

logger = logging.getLogger(__name__)

PROVENANCE_COLUMNS = ["config_hash", "seed"]
LATENT_PREFIX = "latent_"
RUN_ID_COLUMN = "meta_run_id"


def _csv_bytes(frame: pd.DataFrame, config_hash: str, seed: int) -> bytes:
    frame = frame.copy()
    frame["config_hash"] = config_hash
    frame["seed"] = seed
    text = frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")
    return text.encode("utf-8")


def _digest(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()[:16]


def _read_csv(path: Path) -> pd.DataFrame:
    frame = pd.read_csv(path, float_precision="round_trip")
    return frame.drop(columns=[c for c in PROVENANCE_COLUMNS if c in frame.columns])


def ambient_columns(dataset: Dataset):
    if dataset.observations.kind == ObservationKind.HISTOGRAMS:
        return HistogramObserver(dataset.observations.n).columns
    return [f"z_{i}" for i in range(1, dataset.observations.n + 1)]


def dataset_frame(dataset: Dataset) -> pd.DataFrame:
    """Ambient columns, then latent_* columns, then meta_run_id"""
    frame = pd.DataFrame(dataset.observations.vectors, columns=ambient_columns(dataset))
    if dataset.latent is not None:
        for name in dataset.latent.columns:
            frame[f"{LATENT_PREFIX}{name}"] = dataset.latent[name].to_numpy()
    if dataset.run_ids is not None:
        frame[RUN_ID_COLUMN] = np.asarray(dataset.run_ids, dtype=int)
    return frame


class ResultExporter:
    """Writes pipeline artifacts into one output directory"""

    def __init__(self, output_dir: str = "results"):
        self.output_dir = Path(output_dir)
        os.makedirs(self.output_dir, exist_ok=True)

    def _write(self, name: str, payload: bytes) -> Path:
        path = self.output_dir / name
        path.write_bytes(payload)
        logger.info(f"Wrote {path}")
        return path

    def _write_json(self, name: str, model) -> Path:
        return self._write(name, (model.model_dump_json(indent=2) + "\n").encode("utf-8"))

    def export_dataset(self, dataset: Dataset, name: str) -> Dict[str, Path]:
        """
        Write a dataset CSV and its JSON sidecar

        Args:
            dataset: generated or loaded dataset
            name: file stem inside the output directory

        Returns:
            Paths of the written files, keyed "csv" and "json"
        """
        config_hash = dataset.config_hash()
        frame = dataset_frame(dataset)
        payload = _csv_bytes(frame, config_hash, dataset.seed)
        dataset.dataset_hash = _digest(payload)

        meta = DatasetMeta(
            kind=dataset.kind,
            observation_kind=dataset.observations.kind,
            params=dataset.params,
            seed=dataset.seed,
            n_rows=dataset.m,
            ambient_columns=ambient_columns(dataset),
            latent_columns=[c for c in frame.columns if c.startswith(LATENT_PREFIX)],
            bin_edges=dataset.bin_edges.tolist() if dataset.bin_edges is not None else None,
            dataset_hash=dataset.dataset_hash,
            config_hash=config_hash,
        )
        return {
            "csv": self._write(f"{name}.csv", payload),
            "json": self._write_json(f"{name}.json", meta),
        }

    def _export_embedding(self, embedding: Embedding, name: str, config_hash: str, seed: int) -> Path:
        columns = [f"phi_{k}" for k in embedding.selected_indices]
        frame = pd.DataFrame(embedding.coords, columns=columns)
        return self._write(name, _csv_bytes(frame, config_hash, seed))

    def export_analysis(self, outcome: AnalysisOutcome, name: str = "analysis") -> Dict[str, Path]:
        """Report JSON, full and reduced embeddings and the (k, mu_k, r_k) table"""
        report = outcome.report
        config_hash, seed = report.provenance.config_hash, report.provenance.seed
        paths = {
            "report": self._write_json(f"{name}_report.json", report),
            "embedding_full": self._export_embedding(outcome.full_embedding, f"{name}_embedding_full.csv",
                                                     config_hash, seed),
            "embedding_reduced": self._export_embedding(outcome.reduced_embedding, f"{name}_embedding_reduced.csv",
                                                        config_hash, seed),
        }

        unique = set(report.unique_indices)
        spectrum = pd.DataFrame({
            "k": np.arange(1, len(report.spectrum)),
            "mu": report.spectrum[1:],
            "r": report.residuals.residuals,
            "unique": [k in unique for k in range(1, len(report.spectrum))],
        })
        paths["spectrum"] = self._write(f"{name}_spectrum.csv", _csv_bytes(spectrum, config_hash, seed))

        if outcome.analytic is not None:
            paths["analytic"] = self._write(f"{name}_analytic_spectrum.csv",
                                            _csv_bytes(outcome.analytic, config_hash, seed))
        return paths

    def export_sweep(self, grid: SweepGrid, name: str = "sweep") -> Dict[str, Path]:
        """Sweep JSON, flat (lambda, t_obs, mean_ratio, warn) CSV and the transition boundary CSV"""
        config_hash = grid.provenance.config_hash if grid.provenance else ""
        seed = grid.provenance.seed if grid.provenance else 0
        rows = [
            {"lambda": lam, "t_obs": t_obs, "mean_ratio": grid.ratios[a][b], "warn": grid.warnings[a][b]}
            for a, lam in enumerate(grid.lambdas)
            for b, t_obs in enumerate(grid.t_obs_values)
        ]
        boundary = pd.DataFrame({
            "lambda": grid.lambdas,
            "t_obs_boundary": grid.boundary,
            "t_obs_level_set": grid.level_set or [None] * len(grid.lambdas),
        })
        return {
            "json": self._write_json(f"{name}.json", grid),
            "csv": self._write(f"{name}.csv", _csv_bytes(pd.DataFrame(rows), config_hash, seed)),
            "boundary": self._write(f"{name}_boundary.csv", _csv_bytes(boundary, config_hash, seed)),
        }


# ============================================================================
# READERS
# ============================================================================

def load_dataset(csv_path) -> Dataset:
    """
    Read a dataset CSV, using its JSON sidecar when present.

    Without a sidecar, bin_* columns are read as histograms, z_* columns (or
    every untagged column) as raw points, and the dataset kind is "custom".
    """
    csv_path = Path(csv_path)
    if not csv_path.exists():
        raise InvalidData(f"Dataset file {csv_path} does not exist")
    payload = csv_path.read_bytes()
    frame = _read_csv(csv_path)

    sidecar = csv_path.with_suffix(".json")
    meta: Optional[DatasetMeta] = None
    if sidecar.exists():
        raw = json.loads(sidecar.read_text())
        if raw.get("schema_version") != SCHEMA_VERSION:
            raise SchemaMismatch(SCHEMA_VERSION, raw.get("schema_version"))
        meta = DatasetMeta.model_validate(raw)

    latent_cols = [c for c in frame.columns if c.startswith(LATENT_PREFIX)]
    if meta is not None:
        ambient = meta.ambient_columns
        kind = meta.observation_kind
    else:
        bins = [c for c in frame.columns if c.startswith("bin_")]
        tagged = [c for c in frame.columns if c.startswith("z_")]
        if bins:
            ambient, kind = bins, ObservationKind.HISTOGRAMS
        else:
            ambient = tagged or [c for c in frame.columns if c not in latent_cols and c != RUN_ID_COLUMN]
            kind = ObservationKind.RAW_POINTS
    missing = [c for c in ambient if c not in frame.columns]
    if missing:
        raise InvalidData(f"Dataset {csv_path} lacks columns {missing}")

    latent = None
    if latent_cols:
        latent = frame[latent_cols].rename(columns=lambda c: c[len(LATENT_PREFIX):]).reset_index(drop=True)

    return Dataset(
        kind=meta.kind if meta else "custom",
        observations=ObservationSet(frame[ambient].to_numpy(dtype=float), kind),
        params=meta.params if meta else {},
        seed=meta.seed if meta else 0,
        latent=latent,
        run_ids=frame[RUN_ID_COLUMN].to_numpy() if RUN_ID_COLUMN in frame.columns else None,
        bin_edges=np.asarray(meta.bin_edges) if meta and meta.bin_edges else None,
        dataset_hash=_digest(payload),
    )


def load_report(path) -> AnalysisReport:
    """Read an analysis report, rejecting unsupported schema versions"""
    raw = json.loads(Path(path).read_text())
    found = raw.get("schema_version")
    if found != SCHEMA_VERSION:
        raise SchemaMismatch(SCHEMA_VERSION, found)
    return AnalysisReport.model_validate(raw)


def load_sweep(path) -> SweepGrid:
    raw = json.loads(Path(path).read_text())
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise SchemaMismatch(SCHEMA_VERSION, raw.get("schema_version"))
    return SweepGrid.model_validate(raw)


def load_table(path) -> pd.DataFrame:
    """Read any CSV written by ResultExporter without its provenance columns"""
    return _read_csv(Path(path))
