"""
One-dimensional velocity jump process for chemotactic cells.

Every cell starts at x = 0 moving right with probability p and left otherwise,
travels at speed s and reverses direction at the events of a Poisson process
with rate lambda. Snapshots of the population are turned into histograms of
cell positions for the diffusion maps pipeline.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import stats

from dmaps.errors import InvalidData, InvalidParameter
from dmaps.geometry import ObservationSet
from dmaps.models import CorrelationReport, JumpConfig, ObservationKind
from dmaps.preprocess import HistogramObserver
from dmaps.spectral import Embedding

logger = logging.getLogger(__name__)

P_MIN, P_MAX = 0.1, 0.9
CELL_CHUNK = 250


@dataclass(frozen=True)
class Snapshot:
    """State of every cell at one recorded time"""
    t: float
    positions: np.ndarray
    velocities: np.ndarray
    p_right: float


@dataclass(frozen=True)
class Trajectory:
    """Snapshots at t = dt, 2 dt, ..., t_max plus per-cell switch counts over [0, t_max]"""
    snapshots: List[Snapshot]
    switch_counts: np.ndarray
    config: JumpConfig

    @property
    def times(self) -> np.ndarray:
        return np.array([snap.t for snap in self.snapshots])


@dataclass(frozen=True)
class SnapshotEnsemble:
    """Histograms of pooled snapshots from several runs on shared bins"""
    histograms: np.ndarray
    run_ids: np.ndarray
    p: np.ndarray
    t: np.ndarray
    bin_edges: np.ndarray

    @property
    def m(self) -> int:
        return self.histograms.shape[0]

    def observations(self) -> ObservationSet:
        return ObservationSet(self.histograms, ObservationKind.HISTOGRAMS)


# ============================================================================
# SIMULATION
# ============================================================================

def _switch_times(rng: np.random.Generator, rate: float, horizon: float) -> np.ndarray:
    """Poisson event times on [0, horizon], drawn in blocks of exponential gaps"""
    if rate == 0.0:
        return np.empty(0)
    expected = rate * horizon
    block = int(expected + 4.0 * np.sqrt(expected)) + 16
    times = np.cumsum(rng.exponential(1.0 / rate, block))
    while times[-1] <= horizon:
        more = times[-1] + np.cumsum(rng.exponential(1.0 / rate, block))
        times = np.concatenate([times, more])
    return times[: np.searchsorted(times, horizon, side="right")]


def _simulate_cells(config: JumpConfig, stream: int, cells: np.ndarray, sample_times: np.ndarray):
    positions = np.empty((len(sample_times), len(cells)))
    velocities = np.empty_like(positions)
    switches = np.empty(len(cells), dtype=np.int64)

    for column, cell in enumerate(cells):
        rng = np.random.default_rng([config.seed, stream, int(cell)])
        v0 = config.speed if rng.random() < config.p_right else -config.speed
        events = _switch_times(rng, config.switch_rate, config.t_max)

        # Direction sign and displacement (in units of v0) at every switch
        breaks = np.concatenate([[0.0], events])
        signs = np.where(np.arange(len(breaks)) % 2 == 0, 1.0, -1.0)
        travelled = np.concatenate([[0.0], np.cumsum(signs[:-1] * np.diff(breaks))])

        done = np.searchsorted(events, sample_times, side="right")
        positions[:, column] = v0 * (travelled[done] + signs[done] * (sample_times - breaks[done]))
        velocities[:, column] = v0 * signs[done]
        switches[column] = len(events)
    return positions, velocities, switches


def simulate(config: JumpConfig, stream: int = 0, n_jobs: int = 1) -> Trajectory:
    """
    Exact event-driven simulation of the velocity jump process.

    Args:
        config: process and recording parameters
        stream: index separating independent runs that share config.seed
        n_jobs: joblib workers over chunks of cells

    Returns:
        Trajectory with one Snapshot per multiple of dt in (0, t_max]
    """
    sample_times = config.dt * np.arange(1, config.n_snapshots + 1)
    chunks = [np.arange(start, min(start + CELL_CHUNK, config.n_cells))
              for start in range(0, config.n_cells, CELL_CHUNK)]

    if n_jobs == 1 or len(chunks) == 1:
        parts = [_simulate_cells(config, stream, cells, sample_times) for cells in chunks]
    else:
        parts = Parallel(n_jobs=n_jobs)(
            delayed(_simulate_cells)(config, stream, cells, sample_times) for cells in chunks
        )

    positions = np.hstack([part[0] for part in parts])
    velocities = np.hstack([part[1] for part in parts])
    switch_counts = np.concatenate([part[2] for part in parts])

    snapshots = [
        Snapshot(t=float(t), positions=positions[row], velocities=velocities[row], p_right=config.p_right)
        for row, t in enumerate(sample_times)
    ]
    logger.debug(f"Simulated {config.n_cells} cells, lambda={config.switch_rate}, p={config.p_right:.3f}, "
                 f"{config.n_snapshots} snapshots")
    return Trajectory(snapshots=snapshots, switch_counts=switch_counts, config=config)


def simulate_euler(config: JumpConfig, step: float, stream: int = 0) -> Trajectory:
    """Fixed-step discretization; each step moves every cell then flips it with probability 1 - exp(-lambda step)"""
    if not step > 0:
        raise InvalidParameter(f"step must be positive, got {step}")
    per_snapshot = config.dt / step
    if abs(per_snapshot - round(per_snapshot)) > 1e-9 * max(1.0, per_snapshot):
        raise InvalidParameter("dt must be a whole number of Euler steps")
    per_snapshot = int(round(per_snapshot))

    rng = np.random.default_rng([config.seed, stream])
    velocity = np.where(rng.random(config.n_cells) < config.p_right, config.speed, -config.speed)
    position = np.zeros(config.n_cells)
    switches = np.zeros(config.n_cells, dtype=np.int64)
    flip_probability = -np.expm1(-config.switch_rate * step)

    snapshots = []
    for index in range(1, config.n_snapshots + 1):
        for _ in range(per_snapshot):
            position += velocity * step
            flips = rng.random(config.n_cells) < flip_probability
            velocity[flips] *= -1.0
            switches += flips
        snapshots.append(Snapshot(t=index * config.dt, positions=position.copy(),
                                  velocities=velocity.copy(), p_right=config.p_right))
    return Trajectory(snapshots=snapshots, switch_counts=switches, config=config)


def telegraph_variance(speed: float, switch_rate: float, t: float) -> float:
    """Position variance (s^2 / (2 lambda^2)) (2 lambda t - 1 + exp(-2 lambda t)) of the symmetric process"""
    if switch_rate < 0 or t < 0:
        raise InvalidParameter("switch_rate and t must be nonnegative")
    if switch_rate == 0.0:
        return float(speed ** 2 * t ** 2)
    x = 2.0 * switch_rate * t
    return float(speed ** 2 / (2.0 * switch_rate ** 2) * (x + np.expm1(-x)))


# ============================================================================
# OBSERVABLES
# ============================================================================

@dataclass(frozen=True)
class MacroObservables:
    p: float
    t: float
    flux_gap: float  # NaN when one direction has no cells

    @property
    def defined(self) -> bool:
        return bool(np.isfinite(self.flux_gap))


def macroscopic_observables(snapshot: Snapshot) -> MacroObservables:
    """Mean position of right-moving cells minus mean position of left-moving cells"""
    right = snapshot.velocities > 0
    left = snapshot.velocities < 0
    if right.any() and left.any():
        gap = float(snapshot.positions[right].mean() - snapshot.positions[left].mean())
    else:
        gap = float("nan")
    return MacroObservables(p=snapshot.p_right, t=snapshot.t, flux_gap=gap)


def p_grid(runs: int, random_p: bool = False, seed: int = 0) -> np.ndarray:
    """Initial right-moving fractions for the runs of an ensemble"""
    if runs < 1:
        raise InvalidParameter(f"runs must be at least 1, got {runs}")
    if random_p:
        return np.random.default_rng(seed).uniform(P_MIN, P_MAX, runs)
    return np.linspace(P_MIN, P_MAX, runs)


def build_ensemble(base: JumpConfig, runs: int = 10, p_values: Optional[Sequence[float]] = None,
                   random_p: bool = False, n_bins: int = 32,
                   n_jobs: int = 1) -> Tuple[SnapshotEnsemble, pd.DataFrame]:
    """
    Simulate several runs and histogram every snapshot on shared bins.

    Args:
        base: process parameters; p_right is replaced per run
        runs: number of simulations
        p_values: explicit initial fractions, one per run
        random_p: draw p uniformly from [0.1, 0.9] instead of spacing it evenly
        n_bins: histogram bins
        n_jobs: joblib workers for each simulation

    Returns:
        (SnapshotEnsemble, latent table with columns p, t, flux_gap)
    """
    if p_values is None:
        p_values = p_grid(runs, random_p=random_p, seed=base.seed)
    p_values = np.asarray(p_values, dtype=float)
    if len(p_values) != runs:
        raise InvalidParameter(f"Expected {runs} p values, got {len(p_values)}")
    if np.any(p_values <= 0.0) or np.any(p_values >= 1.0):
        raise InvalidParameter("Every p value must lie strictly inside (0, 1)")

    snapshots: List[Snapshot] = []
    run_ids: List[int] = []
    for run, p in enumerate(p_values):
        config = base.model_copy(update={"p_right": float(p)})
        trajectory = simulate(config, stream=run, n_jobs=n_jobs)
        snapshots.extend(trajectory.snapshots)
        run_ids.extend([run] * len(trajectory.snapshots))
    if not snapshots:
        raise InvalidData("Ensemble has no snapshots")

    observer = HistogramObserver(n_bins)
    histograms = observer.fit_transform([snap.positions for snap in snapshots])
    observables = [macroscopic_observables(snap) for snap in snapshots]

    ensemble = SnapshotEnsemble(
        histograms=histograms,
        run_ids=np.asarray(run_ids),
        p=np.array([obs.p for obs in observables]),
        t=np.array([obs.t for obs in observables]),
        bin_edges=observer.bin_edges,
    )
    latent = pd.DataFrame({
        "p": ensemble.p,
        "t": ensemble.t,
        "flux_gap": [obs.flux_gap for obs in observables],
    })
    logger.info(f"Ensemble built: {runs} runs x {base.n_snapshots} snapshots, {n_bins} bins, "
                f"lambda={base.switch_rate}, s={base.speed}")
    return ensemble, latent


# ============================================================================
# CORRELATIONS
# ============================================================================

def _abs_pearson(x: np.ndarray, y: np.ndarray) -> Optional[float]:
    keep = np.isfinite(x) & np.isfinite(y)
    x, y = x[keep], y[keep]
    if len(x) < 3 or np.std(x) == 0.0 or np.std(y) == 0.0:
        return None
    return float(abs(stats.pearsonr(x, y)[0]))


def correlation_report(embedding: Embedding, latent: pd.DataFrame) -> CorrelationReport:
    """
    Match the two embedding columns to the latent p and t.

    The pairing maximizes the sum of the two matched absolute Pearson
    correlations; on a tie column 0 is paired with p.
    """
    coords = embedding.coords
    if coords.shape[1] != 2:
        raise InvalidData(f"Correlation report needs a 2-column embedding, got {coords.shape[1]}")
    if len(latent) != coords.shape[0]:
        raise InvalidData(f"Latent table has {len(latent)} rows, embedding has {coords.shape[0]}")

    variables = {name: latent[name].to_numpy(dtype=float) for name in ("p", "t")}
    corr: Dict[Tuple[int, str], float] = {}
    for column in range(2):
        if np.std(coords[:, column]) == 0.0:
            raise InvalidData(f"Embedding column {column} has zero variance")
        for name, values in variables.items():
            value = _abs_pearson(coords[:, column], values)
            if value is None:
                raise InvalidData(f"Latent column {name!r} has zero variance")
            corr[(column, name)] = value

    straight = corr[(0, "p")] + corr[(1, "t")]
    crossed = corr[(0, "t")] + corr[(1, "p")]
    p_column, t_column = (0, 1) if straight >= crossed else (1, 0)
    indices = embedding.selected_indices
    return CorrelationReport(
        corr_p=corr[(p_column, "p")],
        corr_t=corr[(t_column, "t")],
        assignment={"p": int(indices[p_column]), "t": int(indices[t_column])},
    )


def latent_correlations(embedding: Embedding, latent: pd.DataFrame) -> Dict[str, Dict[str, Optional[float]]]:
    """Absolute Pearson correlation of every embedding column with every latent column"""
    table: Dict[str, Dict[str, Optional[float]]] = {}
    for name in latent.columns:
        values = latent[name].to_numpy(dtype=float)
        table[str(name)] = {
            f"phi_{k}": _abs_pearson(embedding.coords[:, column], values)
            for column, k in enumerate(embedding.selected_indices)
        }
    return table
