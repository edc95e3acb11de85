"""
Pairwise distances, Gaussian affinities and the alpha-normalized Markov matrix.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from dmaps.errors import ConfigError, DegenerateData, InvalidData, InvalidParameter
from dmaps.models import Metric, ObservationKind

logger = logging.getLogger(__name__)

HISTOGRAM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ObservationSet:
    """m observations in R^n, one per row"""
    vectors: np.ndarray
    kind: ObservationKind = ObservationKind.RAW_POINTS

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=float)
        if vectors.ndim != 2:
            raise InvalidData(f"Observations must be a 2-D matrix, got shape {vectors.shape}")
        m, n = vectors.shape
        if m < 2 or n < 1:
            raise InvalidData(f"Need at least 2 observations of dimension >= 1, got {m} x {n}")
        if not np.all(np.isfinite(vectors)):
            raise InvalidData("Observations contain non-finite entries")
        if self.kind == ObservationKind.HISTOGRAMS:
            _check_histograms(vectors)
        object.__setattr__(self, "vectors", vectors)

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    @property
    def n(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric matrix of nonnegative pairwise distances"""
    d: np.ndarray
    metric: Metric

    @property
    def m(self) -> int:
        return self.d.shape[0]


@dataclass(frozen=True)
class MarkovMatrix:
    """Row-stochastic diffusion operator A = D~^-1 W~"""
    a: np.ndarray
    epsilon: float
    alpha: float
    dtilde: np.ndarray

    @property
    def m(self) -> int:
        return self.a.shape[0]


def _check_histograms(vectors: np.ndarray):
    if np.any(vectors < 0):
        raise InvalidData("Histogram rows must be nonnegative")
    sums = vectors.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > HISTOGRAM_TOLERANCE)
    if bad.size:
        raise InvalidData(f"Histogram row {bad[0]} sums to {sums[bad[0]]!r}, expected 1")


def observation_set(vectors, kind: ObservationKind = ObservationKind.RAW_POINTS) -> ObservationSet:
    """Validate and wrap a matrix of observations"""
    return ObservationSet(np.asarray(vectors, dtype=float), ObservationKind(kind))


def euclidean_distances(obs: ObservationSet) -> DistanceMatrix:
    """Exact Euclidean distances between raw points"""
    if obs.kind != ObservationKind.RAW_POINTS:
        raise ConfigError("Euclidean distances expect raw points; use the EMD metric for histograms "
                          "or load histograms as raw points explicitly")
    if not np.all(np.isfinite(obs.vectors)):
        raise InvalidData("Observations contain non-finite entries")
    d = squareform(pdist(obs.vectors, metric="euclidean"))
    return DistanceMatrix(d=d, metric=Metric.EUCLIDEAN)


def emd_1d(hist_a, hist_b) -> float:
    """
    Earth mover's distance between two histograms on the same equally spaced bins.

    Computed as the L1 distance between the cumulative sums, so the result is
    measured in bins (no bin-width factor).
    """
    a = np.asarray(hist_a, dtype=float)
    b = np.asarray(hist_b, dtype=float)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise InvalidData(f"Histograms must be 1-D of equal length, got {a.shape} and {b.shape}")
    _check_histograms(np.vstack([a, b]))
    return float(np.sum(np.abs(np.cumsum(a) - np.cumsum(b))))


def emd_distances(obs: ObservationSet) -> DistanceMatrix:
    """All-pairs EMD between histogram rows"""
    if obs.kind != ObservationKind.HISTOGRAMS:
        raise ConfigError("EMD requires histogram observations, got raw points")
    _check_histograms(obs.vectors)
    cdfs = np.cumsum(obs.vectors, axis=1)
    d = squareform(pdist(cdfs, metric="cityblock"))
    return DistanceMatrix(d=d, metric=Metric.EMD)


def pairwise_distances(obs: ObservationSet, metric: Metric) -> DistanceMatrix:
    """Dispatch to the distance routine for the configured metric"""
    metric = Metric(metric)
    if metric == Metric.EMD:
        return emd_distances(obs)
    if obs.kind == ObservationKind.HISTOGRAMS:
        # Euclidean distance between histograms is allowed as a comparison baseline
        raw = ObservationSet(obs.vectors, ObservationKind.RAW_POINTS)
        return euclidean_distances(raw)
    return euclidean_distances(obs)


def median_pairwise(d: DistanceMatrix) -> float:
    """Median of the strictly upper-triangular distances"""
    m = d.m
    if m < 2:
        raise InvalidData("Need at least two observations for a median distance")
    upper = d.d[np.triu_indices(m, k=1)]
    median = float(np.median(upper))
    if median <= 0.0:
        if np.all(upper == 0.0):
            raise DegenerateData("All pairwise distances are zero; kernel scale would be 0")
        raise DegenerateData("Median pairwise distance is zero; kernel scale would be 0")
    return median


def build_markov(d: DistanceMatrix, epsilon: float, alpha: float) -> MarkovMatrix:
    """
    Build the alpha-normalized Markov matrix from pairwise distances.

    Args:
        d: pairwise distances
        epsilon: kernel scale, in the units of the distances
        alpha: density normalization exponent (0 graph Laplacian, 1 Laplace-Beltrami)

    Returns:
        MarkovMatrix with A = D~^-1 W~ and the row sums of W~
    """
    if not epsilon > 0:
        raise InvalidParameter(f"Kernel scale epsilon must be positive, got {epsilon}")
    if not 0.0 <= alpha <= 1.0:
        raise InvalidParameter(f"alpha must lie in [0, 1], got {alpha}")

    w = np.exp(-np.square(d.d / epsilon))
    degree = w.sum(axis=1)

    # W~ = D^-alpha W D^-alpha
    scale = degree ** (-alpha)
    w_tilde = scale[:, None] * w * scale[None, :]
    dtilde = w_tilde.sum(axis=1)
    a = w_tilde / dtilde[:, None]

    logger.debug(f"Markov matrix built: m={d.m}, epsilon={epsilon:.6g}, alpha={alpha}")
    return MarkovMatrix(a=a, epsilon=float(epsilon), alpha=float(alpha), dtilde=dtilde)
