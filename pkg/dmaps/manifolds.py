"""
Synthetic manifolds with known intrinsic geometry: strip, Swiss roll and torus.
"""
import logging
from typing import List, Tuple, Union

import numpy as np
import pandas as pd
from scipy import optimize, stats

from dmaps.errors import InvalidParameter, NumericalFailure
from dmaps.geometry import ObservationSet
from dmaps.models import AnalyticMode, Density, StripSpec
from dmaps.spectral import DiffusionResult, analytic_to_discrete_eigenvalue

logger = logging.getLogger(__name__)

SWISS_ROLL_THETA_MIN = 1.5 * np.pi
SWISS_ROLL_THETA_MAX = 4.5 * np.pi
ARCLENGTH_TOL = 1e-10

Sample = Union[ObservationSet, Tuple[ObservationSet, pd.DataFrame]]


def _with_latent(points: np.ndarray, latent: dict, return_latent: bool) -> Sample:
    obs = ObservationSet(points)
    if not return_latent:
        return obs
    return obs, pd.DataFrame(latent)


# ============================================================================
# STRIP
# ============================================================================

def sample_strip(spec: StripSpec, return_latent: bool = False) -> Sample:
    """
    Sample m points from the rectangle [0, l1] x [0, l2].

    z1 is uniform or a Gaussian centred at l1/2 with sigma l1/4 truncated to
    [0, l1]; z2 is always uniform.
    """
    rng = np.random.default_rng(spec.seed)
    if spec.density == Density.GAUSSIAN_IN_Z1:
        sigma = spec.l1 / 4.0
        bound = (spec.l1 / 2.0) / sigma
        z1 = stats.truncnorm.rvs(-bound, bound, loc=spec.l1 / 2.0, scale=sigma, size=spec.m, random_state=rng)
    else:
        z1 = rng.uniform(0.0, spec.l1, spec.m)
    z2 = rng.uniform(0.0, spec.l2, spec.m)

    points = np.column_stack([z1, z2])
    return _with_latent(points, {"z1": z1, "z2": z2}, return_latent)


def strip_spectrum(l1: float, l2: float, k_max: int) -> List[AnalyticMode]:
    """All Neumann modes with k1, k2 <= k_max, sorted by eigenvalue (ties by k1, k2)"""
    if k_max < 1:
        raise InvalidParameter(f"k_max must be at least 1, got {k_max}")
    if not (l1 > 0 and l2 > 0):
        raise InvalidParameter(f"Strip lengths must be positive, got l1={l1}, l2={l2}")

    modes = [
        AnalyticMode(k1=k1, k2=k2, mu_tilde=(k1 * np.pi / l1) ** 2 + (k2 * np.pi / l2) ** 2)
        for k1 in range(k_max + 1)
        for k2 in range(k_max + 1)
    ]
    return sorted(modes, key=lambda mode: (mode.mu_tilde, mode.k1, mode.k2))


def strip_eigenfunction(mode: AnalyticMode, l1: float, l2: float, z: np.ndarray) -> np.ndarray:
    """cos(k1 pi z1 / l1) cos(k2 pi z2 / l2) on an m x 2 array of strip points"""
    z = np.asarray(z, dtype=float)
    if z.ndim != 2 or z.shape[1] != 2:
        raise InvalidParameter(f"Strip points must be an m x 2 array, got shape {z.shape}")
    return np.cos(mode.k1 * np.pi * z[:, 0] / l1) * np.cos(mode.k2 * np.pi * z[:, 1] / l2)


def spectrum_comparison(result: DiffusionResult, l1: float, l2: float) -> pd.DataFrame:
    """Empirical eigenvalues next to exp(-eps^2 mu~ / 4) of the k-th smallest strip mode"""
    k_total = result.num_components
    # The k_total smallest modes all have k1, k2 < k_total because l1 >= l2
    modes = strip_spectrum(l1, l2, k_total)[:k_total]
    return pd.DataFrame({
        "k": np.arange(k_total),
        "empirical": result.eigenvalues,
        "analytic": [analytic_to_discrete_eigenvalue(mode.mu_tilde, result.epsilon) for mode in modes],
        "k1": [mode.k1 for mode in modes],
        "k2": [mode.k2 for mode in modes],
    })


# ============================================================================
# SWISS ROLL
# ============================================================================

def arclength(theta) -> np.ndarray:
    """Arclength s(theta) = (theta sqrt(1 + theta^2) + asinh(theta)) / 2 of the spiral (theta cos theta, theta sin theta)"""
    theta = np.asarray(theta, dtype=float)
    return 0.5 * (theta * np.sqrt(1.0 + theta ** 2) + np.arcsinh(theta))


def invert_arclength(s) -> np.ndarray:
    """Solve s(theta) = s for theta >= 0 with Newton's method"""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise InvalidParameter("Arclength values must be nonnegative")

    def residual(theta):
        return arclength(theta) - s

    def slope(theta):
        return np.sqrt(1.0 + theta ** 2)

    # Both guesses sit right of the root, where Newton on a convex s(theta) is monotone
    guess = np.where(s > 1.0, np.sqrt(2.0 * s), s)
    try:
        theta = optimize.newton(residual, guess, fprime=slope, tol=ARCLENGTH_TOL, maxiter=100)
    except RuntimeError as exc:
        raise NumericalFailure("Arclength inversion did not converge", {"tol": ARCLENGTH_TOL, "maxiter": 100}) from exc
    return np.asarray(theta, dtype=float)


def sample_swiss_roll(h: float, m: int, theta_min: float = SWISS_ROLL_THETA_MIN,
                      theta_max: float = SWISS_ROLL_THETA_MAX, seed: int = 0,
                      return_latent: bool = False) -> Sample:
    """
    Sample a Swiss roll (theta cos theta, theta sin theta, h t) uniformly along arclength.

    Args:
        h: height of the roll
        m: number of points
        theta_min: inner end of the spiral (> 0)
        theta_max: outer end of the spiral
        seed: random seed
        return_latent: also return the (theta, t) table

    Returns:
        ObservationSet, or (ObservationSet, latent DataFrame) when return_latent is set
    """
    if not 0.0 < theta_min < theta_max:
        raise InvalidParameter(f"Need 0 < theta_min < theta_max, got {theta_min}, {theta_max}")
    if not h > 0:
        raise InvalidParameter(f"Height must be positive, got {h}")
    if m < 2:
        raise InvalidParameter(f"Need at least 2 points, got {m}")

    rng = np.random.default_rng(seed)
    u = rng.uniform(arclength(theta_min), arclength(theta_max), m)
    theta = invert_arclength(u)
    t = rng.uniform(0.0, 1.0, m)

    points = np.column_stack([theta * np.cos(theta), theta * np.sin(theta), h * t])
    logger.debug(f"Swiss roll sampled: h={h}, m={m}, theta in [{theta_min:.4g}, {theta_max:.4g}]")
    return _with_latent(points, {"theta": theta, "t": t}, return_latent)


# ============================================================================
# TORUS
# ============================================================================

def sample_torus(r1: float, r2: float, m: int, seed: int = 0, return_latent: bool = False) -> Sample:
    """Points ((r1 + r2 cos t2) cos t1, (r1 + r2 cos t2) sin t1, r2 sin t2) with uniform angles"""
    if not r1 > r2 > 0:
        raise InvalidParameter(f"Need r1 > r2 > 0, got r1={r1}, r2={r2}")
    if m < 2:
        raise InvalidParameter(f"Need at least 2 points, got {m}")

    rng = np.random.default_rng(seed)
    theta1 = rng.uniform(0.0, 2.0 * np.pi, m)
    theta2 = rng.uniform(0.0, 2.0 * np.pi, m)

    ring = r1 + r2 * np.cos(theta2)
    points = np.column_stack([ring * np.cos(theta1), ring * np.sin(theta1), r2 * np.sin(theta2)])
    return _with_latent(points, {"theta1": theta1, "theta2": theta2}, return_latent)
