"""
Dimensionality sweep over switching rate and observation time scale.

For each (lambda, t_obs) cell the chemotaxis ensemble is simulated with
s = sqrt(lambda), t_max = t_obs N and dt = t_max / 10, analysed with the EMD
pipeline, and summarized by the eigenvalue ratio of its two unique
eigendirections. Small ratios mean the data has collapsed to one dimension.
"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from pydantic import ValidationError

from dmaps.errors import DmapsError, InvalidParameter
from dmaps.models import Metric, PipelineConfig, Provenance, SweepGrid, finite_or_none, stable_hash
from dmaps.pipeline import analyze_safely, generate_dataset

logger = logging.getLogger(__name__)

DEFAULT_LAMBDAS = np.logspace(-1, 1, 6)
DEFAULT_T_OBS = np.logspace(-2, 0, 6)
SNAPSHOTS_PER_RUN = 10


def sweep_cell_params(switch_rate: float, t_obs: float, n_cells: int, runs: int, n_bins: int) -> dict:
    """Chemotaxis generator parameters for one grid cell (s^2 / lambda = 1)"""
    t_max = t_obs * n_cells
    return {
        "n_cells": n_cells,
        "speed": float(np.sqrt(switch_rate)),
        "switch_rate": float(switch_rate),
        "t_max": float(t_max),
        "dt": float(t_max / SNAPSHOTS_PER_RUN),
        "runs": runs,
        "n_bins": n_bins,
    }


def _run_cell(switch_rate: float, t_obs: float, replicate: int, n_cells: int, runs: int, n_bins: int,
              config: PipelineConfig, seed: int) -> Tuple[Optional[float], bool]:
    params = sweep_cell_params(switch_rate, t_obs, n_cells, runs, n_bins)
    try:
        dataset = generate_dataset("chemotaxis", params, seed=seed + replicate)
    except (DmapsError, ValidationError) as exc:
        logger.warning(f"Sweep cell lambda={switch_rate:.4g}, t_obs={t_obs:.4g} failed to simulate: {exc}")
        return None, True

    outcome = analyze_safely(dataset, config)
    if outcome is None or outcome.report.dimensionality_ratio is None:
        return None, True
    report = outcome.report
    if report.ratio_from_fallback:
        logger.warning(f"Sweep cell lambda={switch_rate:.4g}, t_obs={t_obs:.4g}, replicate {replicate}: "
                       f"fewer than two unique directions")
    logger.debug(f"lambda={switch_rate:.4g} t_obs={t_obs:.4g} rep={replicate}: ratio={report.dimensionality_ratio:.4f}")
    return report.dimensionality_ratio, report.ratio_from_fallback


def transition_curve(lambdas: Sequence[float]) -> np.ndarray:
    """Expected transition t_obs = 1 / lambda"""
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(lambdas <= 0):
        raise InvalidParameter("Switching rates must be positive")
    return 1.0 / lambdas


def transition_level_set(grid: SweepGrid, level: float = 0.5) -> np.ndarray:
    """
    For each lambda, the t_obs at which the mean ratio first drops below level.

    Interpolates linearly in log t_obs between the last cell above and the
    first cell below the level; NaN when the row never drops below it.
    """
    t_values = np.asarray(grid.t_obs_values, dtype=float)
    order = np.argsort(t_values)
    log_t = np.log(t_values[order])
    crossings = []
    for row in grid.ratios:
        ratios = np.array([np.nan if r is None else r for r in row], dtype=float)[order]
        crossing = np.nan
        previous = None
        for j, ratio in enumerate(ratios):
            if np.isnan(ratio):
                continue
            if ratio < level:
                if previous is None:
                    crossing = t_values[order][j]
                else:
                    i, r_prev = previous
                    fraction = (r_prev - level) / (r_prev - ratio)
                    crossing = float(np.exp(log_t[i] + fraction * (log_t[j] - log_t[i])))
                break
            previous = (j, ratio)
        crossings.append(crossing)
    return np.array(crossings, dtype=float)


def dimensionality_sweep(lambdas: Sequence[float] = DEFAULT_LAMBDAS, t_obs_values: Sequence[float] = DEFAULT_T_OBS,
                         replicates: int = 3, n_cells: int = 1000, runs: int = 10, n_bins: int = 32,
                         config: Optional[PipelineConfig] = None, seed: int = 0, n_jobs: int = 1) -> SweepGrid:
    """
    Mean dimensionality ratio over a (lambda, t_obs) grid.

    Args:
        lambdas: switching rates
        t_obs_values: observation time scales t_max / N
        replicates: independent ensembles per cell, seeded seed + replicate
        n_cells: cells per simulation
        runs: simulations per ensemble
        n_bins: histogram bins
        config: analysis settings (metric is forced to EMD)
        seed: base seed
        n_jobs: joblib workers over grid cells

    Returns:
        SweepGrid with per-replicate ratios, means and warning flags
    """
    lambdas = [float(value) for value in lambdas]
    t_obs_values = [float(value) for value in t_obs_values]
    if not lambdas or not t_obs_values:
        raise InvalidParameter("Sweep grids must be nonempty")
    if min(lambdas) <= 0 or min(t_obs_values) <= 0:
        raise InvalidParameter("Sweep grid values must be positive")
    if replicates < 1:
        raise InvalidParameter(f"replicates must be at least 1, got {replicates}")

    config = (config or PipelineConfig()).model_copy(update={"metric": Metric.EMD})
    tasks = [(a, b, r) for a in range(len(lambdas)) for b in range(len(t_obs_values)) for r in range(replicates)]
    logger.info(f"Sweep: {len(lambdas)} x {len(t_obs_values)} grid, {replicates} replicates, N={n_cells}")

    outputs = Parallel(n_jobs=n_jobs)(
        delayed(_run_cell)(lambdas[a], t_obs_values[b], r, n_cells, runs, n_bins, config, seed)
        for a, b, r in tasks
    )

    shape = (len(lambdas), len(t_obs_values), replicates)
    values = np.full(shape, np.nan)
    flags = np.zeros(shape, dtype=bool)
    for (a, b, r), (ratio, warned) in zip(tasks, outputs):
        values[a, b, r] = np.nan if ratio is None else ratio
        flags[a, b, r] = warned

    means: List[List[Optional[float]]] = []
    for a in range(len(lambdas)):
        row = []
        for b in range(len(t_obs_values)):
            cell = values[a, b]
            row.append(finite_or_none(np.mean(cell[np.isfinite(cell)])) if np.isfinite(cell).any() else None)
        means.append(row)

    grid = SweepGrid(
        lambdas=lambdas,
        t_obs_values=t_obs_values,
        ratios=means,
        replicate_ratios=[[[finite_or_none(v) for v in values[a, b]] for b in range(shape[1])] for a in range(shape[0])],
        warnings=flags.any(axis=2).tolist(),
        replicates=replicates,
        n_cells=n_cells,
        boundary=transition_curve(lambdas).tolist(),
    )
    grid.level_set = [finite_or_none(v) for v in transition_level_set(grid)]

    sweep_hash = stable_hash({"lambdas": lambdas, "t_obs": t_obs_values, "replicates": replicates,
                              "n_cells": n_cells, "runs": runs, "n_bins": n_bins,
                              "config": config.model_dump(mode="json")})
    grid.provenance = Provenance(config_hash=sweep_hash, dataset_hash=stable_hash({"ratios": grid.ratios}), seed=seed)
    return grid
