"""
Detection of unique eigendirections with local linear regression.

Each eigenvector phi_k is regressed on phi_1..phi_{k-1} with a Gaussian-weighted
local linear fit; the normalized leave-one-out error r_k is small for harmonics
of earlier eigenvectors and close to 1 for eigenvectors that carry a new
direction in the data.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.spatial.distance import pdist, squareform
from sklearn.metrics.pairwise import rbf_kernel

from dmaps.errors import DmapsError, InvalidData, InvalidParameter, NumericalFailure
from dmaps.geometry import DistanceMatrix, median_pairwise
from dmaps.models import EquivalenceReport, Metric, ResidualReport, SelectionCriterion
from dmaps.spectral import DiffusionResult

logger = logging.getLogger(__name__)

EPS_REG_DIVISOR = 3.0
BLOCK_SIZE = 64
LEVERAGE_TOL = 1e-8


@dataclass(frozen=True)
class LocalFitContext:
    """Predictors Phi_{k-1} (m x (k-1)), target phi_k and regression kernel scale"""
    predictors: np.ndarray
    target: np.ndarray
    kernel_scale: float

    def __post_init__(self):
        predictors = np.asarray(self.predictors, dtype=float)
        if predictors.ndim == 1:
            predictors = predictors[:, None]
        target = np.asarray(self.target, dtype=float).ravel()
        if predictors.ndim != 2 or predictors.shape[1] < 1:
            raise InvalidData("At least one predictor column is required")
        if predictors.shape[0] != target.shape[0]:
            raise InvalidData(f"Predictors have {predictors.shape[0]} rows but target has {target.shape[0]}")
        object.__setattr__(self, "predictors", predictors)
        object.__setattr__(self, "target", target)


class LocalLinearSmoother:
    """Gaussian-weighted local linear regression evaluated at the training points"""

    def __init__(self, kernel_scale: float, ridge: float = 1e-10, n_jobs: int = 1):
        if not kernel_scale > 0:
            raise InvalidParameter(f"Regression kernel scale must be positive, got {kernel_scale}")
        self.kernel_scale = kernel_scale
        self.ridge = ridge
        self.n_jobs = n_jobs

    def weights(self, predictors: np.ndarray) -> np.ndarray:
        """K(Phi(i), Phi(j)) = exp(-|Phi(i) - Phi(j)|^2 / eps_reg^2)"""
        return rbf_kernel(predictors, gamma=1.0 / self.kernel_scale ** 2)

    def _solve(self, gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        try:
            solved = np.linalg.solve(gram, rhs)
            if np.all(np.isfinite(solved)):
                return solved
        except np.linalg.LinAlgError:
            pass
        logger.debug("Singular local normal equations, falling back to pseudo-inverse")
        return np.linalg.pinv(gram) @ rhs

    def _block_fits(self, predictors: np.ndarray, target: np.ndarray, weights: np.ndarray,
                    rows: np.ndarray, leave_out: bool) -> Tuple[np.ndarray, np.ndarray]:
        """Local fits at `rows` with the design [1, Phi_j - Phi_i] centred on each evaluation point"""
        b, p = len(rows), predictors.shape[1]
        local = np.arange(b)
        w = weights.copy()
        if leave_out:
            w[local, rows] = 0.0

        dx = predictors[None, :, :] - predictors[rows][:, None, :]
        wdx = w[:, :, None] * dx
        slopes = np.matmul(wdx.transpose(0, 2, 1), dx)

        gram = np.empty((b, p + 1, p + 1))
        gram[:, 0, 0] = w.sum(axis=1)
        gram[:, 0, 1:] = wdx.sum(axis=1)
        gram[:, 1:, 0] = gram[:, 0, 1:]
        # Point i has dx = 0, so the slope block and its ridge are the same with or without it
        scale = np.trace(slopes, axis1=1, axis2=2) / p
        gram[:, 1:, 1:] = slopes + (self.ridge * np.maximum(scale, np.finfo(float).tiny))[:, None, None] * np.eye(p)

        rhs = np.empty((b, p + 1, 2))
        rhs[:, 0, 0] = w @ target
        rhs[:, 1:, 0] = np.einsum("bmp,m->bp", wdx, target)
        rhs[:, :, 1] = 0.0
        rhs[:, 0, 1] = 1.0

        solved = self._solve(gram, rhs)
        fits = solved[:, 0, 0]
        leverage = weights[local, rows] * solved[:, 0, 1]
        return fits, leverage

    def _fits(self, predictors: np.ndarray, target: np.ndarray, weights: np.ndarray,
              rows: np.ndarray, leave_out: bool) -> Tuple[np.ndarray, np.ndarray]:
        blocks = [rows[start:start + BLOCK_SIZE] for start in range(0, len(rows), BLOCK_SIZE)]
        if self.n_jobs == 1 or len(blocks) == 1:
            parts = [self._block_fits(predictors, target, weights[block], block, leave_out) for block in blocks]
        else:
            parts = Parallel(n_jobs=self.n_jobs, prefer="threads")(
                delayed(self._block_fits)(predictors, target, weights[block], block, leave_out)
                for block in blocks
            )
        return np.concatenate([fit for fit, _ in parts]), np.concatenate([lev for _, lev in parts])

    def loo_residuals(self, predictors: np.ndarray, target: np.ndarray, method: str = "direct") -> np.ndarray:
        """
        Leave-one-out prediction errors at every point.

        Args:
            predictors: m x p matrix
            target: length-m vector
            method: "direct" refits without point i; "hat" uses the linear
                smoother identity (y_i - yhat_i) / (1 - L_ii)

        Returns:
            length-m vector of held-out residuals
        """
        if method not in ("direct", "hat"):
            raise InvalidParameter(f"Unknown LOOCV method {method!r}")
        predictors = np.asarray(predictors, dtype=float)
        m = predictors.shape[0]
        weights = self.weights(predictors)
        rows = np.arange(m)

        if method == "direct":
            fits, _ = self._fits(predictors, target, weights, rows, leave_out=True)
            return target - fits

        fits, leverage = self._fits(predictors, target, weights, rows, leave_out=False)
        denominator = 1.0 - leverage
        residuals = np.empty(m)
        stable = denominator > LEVERAGE_TOL
        residuals[stable] = (target[stable] - fits[stable]) / denominator[stable]
        if not np.all(stable):
            # Points that carry their own fit are refitted without themselves
            unstable = rows[~stable]
            logger.debug(f"{len(unstable)} points with leverage near 1, refitting them directly")
            refits, _ = self._fits(predictors, target, weights, unstable, leave_out=True)
            residuals[unstable] = target[unstable] - refits
        return residuals


def loocv_residual(ctx: LocalFitContext, method: str = "direct", ridge: float = 1e-10, n_jobs: int = 1) -> float:
    """Normalized leave-one-out error r = sqrt(sum (phi - fit)^2 / sum phi^2)"""
    m, p = ctx.predictors.shape
    if m <= p + 1:
        raise InvalidData(f"Need more than {p + 1} points to fit {p} slopes and an intercept, got {m}")
    denominator = float(np.sum(ctx.target ** 2))
    if denominator == 0.0:
        raise InvalidData("Target eigenvector is identically zero")

    smoother = LocalLinearSmoother(ctx.kernel_scale, ridge=ridge, n_jobs=n_jobs)
    residuals = smoother.loo_residuals(ctx.predictors, ctx.target, method=method)
    return float(np.sqrt(np.sum(residuals ** 2) / denominator))


def regression_scale(predictors: np.ndarray) -> float:
    """eps_reg = M / 3 with M the median pairwise distance between predictor rows"""
    d = DistanceMatrix(d=squareform(pdist(predictors, metric="euclidean")), metric=Metric.EUCLIDEAN)
    return median_pairwise(d) / EPS_REG_DIVISOR


def _tag_with_index(exc: DmapsError, k: int) -> DmapsError:
    message = f"eigenvector {k}: {exc}"
    if isinstance(exc, NumericalFailure):
        return NumericalFailure(message, {**exc.diagnostics, "k": k})
    tagged = type(exc)(message)
    tagged.k = k
    return tagged


def select_unique(residuals: Sequence[float], criterion: Optional[SelectionCriterion] = None) -> List[int]:
    """
    Pick the unique eigendirections from residuals r_1..r_{K-1}.

    Threshold(t) keeps every k with r_k > t; TopD(d) keeps the d largest
    residuals. Indices are returned in ascending order.
    """
    criterion = criterion or SelectionCriterion()
    r = np.asarray(residuals, dtype=float)
    if criterion.kind == "top_d":
        d = criterion.top_d
        if d > len(r):
            raise InvalidParameter(f"Cannot select {d} directions out of {len(r)} residuals")
        chosen = np.argsort(-r, kind="stable")[:d] + 1
        return sorted(int(k) for k in chosen)
    return [k for k, value in enumerate(r, start=1) if value > criterion.threshold]


def score_all(result: DiffusionResult, criterion: Optional[SelectionCriterion] = None, method: str = "direct",
              ridge: float = 1e-10, n_jobs: int = 1, warn_size: int = 5000) -> ResidualReport:
    """
    Score every nontrivial eigenvector of a diffusion result.

    Args:
        result: eigendecomposition with K >= 3 components
        criterion: selection rule for the unique set (default Threshold(0.5))
        method: LOOCV path, "direct" or "hat"
        ridge: trace-scaled ridge factor for the local normal equations
        n_jobs: joblib workers for the held-out point blocks
        warn_size: log a complexity warning above this many observations

    Returns:
        ResidualReport with r_1 = 1 and the selected unique indices
    """
    criterion = criterion or SelectionCriterion()
    k_total = result.num_components
    if k_total < 3:
        raise InvalidParameter(f"Scoring needs at least 3 eigenpairs, got {k_total}")
    if result.m > warn_size:
        logger.warning(f"Local linear LOOCV on m={result.m} points is O(m^2 k^2) per eigenvector")

    phi = result.eigenvectors
    residuals = [1.0]
    eps_used: List[Optional[float]] = [None]
    for k in range(2, k_total):
        try:
            predictors = phi[:, 1:k]
            eps_reg = regression_scale(predictors)
            ctx = LocalFitContext(predictors=predictors, target=phi[:, k], kernel_scale=eps_reg)
            r_k = loocv_residual(ctx, method=method, ridge=ridge, n_jobs=n_jobs)
        except DmapsError as exc:
            raise _tag_with_index(exc, k) from exc
        logger.debug(f"r_{k} = {r_k:.4f} (eps_reg={eps_reg:.4g})")
        residuals.append(r_k)
        eps_used.append(eps_reg)

    unique = select_unique(residuals, criterion)
    logger.info(f"Unique eigendirections under {criterion.describe()}: {unique}")
    return ResidualReport(
        residuals=residuals,
        unique_indices=unique,
        criterion=criterion.describe(),
        threshold=criterion.threshold if criterion.kind == "threshold" else None,
        eps_reg_used=eps_used,
    )


def _selected_eigenvalues(result: DiffusionResult, indices: Sequence[int]) -> np.ndarray:
    indices = list(indices)
    if not indices:
        raise InvalidParameter("No eigendirections selected")
    mus = result.eigenvalues[indices]
    if np.any(mus <= 0.0) or np.any(mus >= 1.0):
        raise InvalidParameter(f"Selected eigenvalues must lie strictly inside (0, 1), got {mus.tolist()}")
    return mus


def relative_lengths(result: DiffusionResult, indices: Sequence[int]) -> np.ndarray:
    """Relative extent L_j = 1 / sqrt(-log mu_{i_j}) along each selected direction"""
    mus = _selected_eigenvalues(result, indices)
    if result.alpha != 1.0:
        logger.warning(f"Relative lengths assume uniform sampling; alpha={result.alpha} does not remove density effects")
    return 1.0 / np.sqrt(-np.log(mus))


def dimensionality_ratio(mu_1: float, mu_2: float) -> float:
    """sqrt(log mu_1 / log mu_2); small values mean the data is effectively one-dimensional"""
    for name, mu in (("mu_1", mu_1), ("mu_2", mu_2)):
        if not 0.0 < mu < 1.0:
            raise InvalidParameter(f"{name} must lie strictly inside (0, 1), got {mu}")
    if mu_2 > mu_1:
        raise InvalidParameter(f"Expected mu_2 <= mu_1, got mu_1={mu_1}, mu_2={mu_2}")
    return float(np.sqrt(np.log(mu_1) / np.log(mu_2)))


def unique_pair_ratio(result: DiffusionResult, report: ResidualReport) -> Tuple[float, Tuple[int, int], bool]:
    """
    Dimensionality ratio of the two leading unique eigendirections.

    Falls back to the two largest residuals when fewer than two directions
    were selected; the returned flag marks the fallback.
    """
    fallback = len(report.unique_indices) < 2
    if fallback:
        pair = select_unique(report.residuals, SelectionCriterion.by_count(2))
    else:
        pair = report.unique_indices[:2]
    i1, i2 = pair
    mu_1, mu_2 = result.eigenvalues[i1], result.eigenvalues[i2]
    if mu_2 > mu_1:
        mu_1, mu_2 = mu_2, mu_1
    return dimensionality_ratio(float(mu_1), float(mu_2)), (i1, i2), fallback


def _pairs(m: int, sample_pairs: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    if sample_pairs >= m * (m - 1) // 2:
        return np.triu_indices(m, k=1)
    rng = np.random.default_rng(seed)
    first = rng.integers(0, m, size=sample_pairs)
    second = rng.integers(0, m - 1, size=sample_pairs)
    second = second + (second >= first)
    return first, second


def equivalence_check(result: DiffusionResult, indices: Sequence[int], tau: int = 0,
                      sample_pairs: int = 10000, seed: int = 0) -> EquivalenceReport:
    """
    Check that the reduced diffusion distance is equivalent to the full one.

    Verifies reduced^2 <= full^2 <= (1 + K^2 sum_{k not in I} mu_k^{2 tau}) reduced^2
    on sampled pairs, where K is the largest observed ratio of repeated to
    unique coordinate differences.
    """
    unique = sorted(set(int(k) for k in indices))
    if not unique:
        raise InvalidParameter("The unique index set must be nonempty")
    everything = list(result.nontrivial_indices())
    repeated = [k for k in everything if k not in unique]

    first, second = _pairs(result.m, sample_pairs, seed)
    delta = result.eigenvectors[first] - result.eigenvectors[second]
    weights = result.eigenvalues ** (2 * tau)

    full = np.sum(weights[everything] * delta[:, everything] ** 2, axis=1)
    reduced = np.sum(weights[unique] * delta[:, unique] ** 2, axis=1)

    unique_norm = np.linalg.norm(delta[:, unique], axis=1)
    repeated_norm = np.linalg.norm(delta[:, repeated], axis=1) if repeated else np.zeros(len(first))
    flat = unique_norm <= 1e-12
    violations = int(np.sum(flat & (repeated_norm > 1e-12)))
    if violations:
        logger.warning(f"{violations} sampled pairs differ only in repeated coordinates (Lipschitz assumption violated)")

    k_est = float(np.max(repeated_norm[~flat] / unique_norm[~flat])) if repeated and np.any(~flat) else 0.0
    bound = 1.0 + k_est ** 2 * float(np.sum(weights[repeated]))

    upper_slack = full - reduced
    lower_slack = bound * reduced - full
    worst = float(min(upper_slack.min(), lower_slack.min()))
    return EquivalenceReport(
        holds=bool(worst >= -1e-9 and violations == 0),
        worst_slack=worst,
        k_est=k_est,
        pairs_checked=int(len(first)),
        lipschitz_violations=violations,
        tau=int(tau),
    )
