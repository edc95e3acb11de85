"""
Eigendecomposition of the diffusion operator, embeddings and diffusion distances.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import ArpackNoConvergence, eigsh
from scipy.spatial.distance import pdist, squareform

from dmaps.errors import InvalidParameter, NumericalFailure
from dmaps.geometry import MarkovMatrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DiffusionResult:
    """Leading eigenpairs of a Markov matrix, sorted by |mu| descending"""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # m x K, unit-norm columns
    epsilon: float
    alpha: float
    tau: int
    dtilde: np.ndarray
    symmetric_vectors: np.ndarray  # eigenvectors of D~^-1/2 W~ D~^-1/2

    @property
    def num_components(self) -> int:
        return len(self.eigenvalues)

    @property
    def m(self) -> int:
        return self.eigenvectors.shape[0]

    def nontrivial_indices(self) -> Tuple[int, ...]:
        return tuple(range(1, self.num_components))


@dataclass(frozen=True)
class Embedding:
    """Diffusion coordinates mu_k^tau phi_k for the selected eigenvectors"""
    coords: np.ndarray
    selected_indices: Tuple[int, ...]
    tau: int


def symmetric_conjugate(markov: MarkovMatrix) -> np.ndarray:
    """S = D~^1/2 A D~^-1/2, which equals D~^-1/2 W~ D~^-1/2"""
    root = np.sqrt(markov.dtilde)
    s = root[:, None] * markov.a / root[None, :]
    return 0.5 * (s + s.T)


def _solve_symmetric(s: np.ndarray, k: int, solver: str, v0: np.ndarray):
    m = s.shape[0]
    if solver == "dense" or k >= m - 1:
        try:
            return scipy.linalg.eigh(s)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("Dense symmetric eigensolver failed",
                                   {"solver": "eigh", "m": m, "reason": str(exc)}) from exc

    maxiter = max(1000, 10 * m)
    try:
        return eigsh(s, k=k, which="LM", v0=v0, tol=0.0, maxiter=maxiter)
    except ArpackNoConvergence as exc:
        raise NumericalFailure("Lanczos eigensolver did not converge",
                               {"solver": "arpack", "requested": k,
                                "converged": len(exc.eigenvalues), "maxiter": maxiter}) from exc


def eigendecompose(markov: MarkovMatrix, num_components: int, solver: str = "arpack") -> DiffusionResult:
    """
    Compute the top eigenpairs of A through its symmetric conjugate.

    Args:
        markov: row-stochastic Markov matrix
        num_components: number K of eigenpairs to keep (2 <= K <= m)
        solver: "arpack" (Lanczos) or "dense"

    Returns:
        DiffusionResult with unit-norm, sign-fixed right eigenvectors of A
    """
    m = markov.m
    k = int(num_components)
    if not 2 <= k <= m:
        raise InvalidParameter(f"num_components must lie in [2, {m}], got {k}")

    s = symmetric_conjugate(markov)
    root = np.sqrt(markov.dtilde)
    v0 = root / np.linalg.norm(root)

    logger.info(f"Eigendecomposition: m={m}, K={k}, solver={solver}")
    values, vectors = _solve_symmetric(s, k, solver, v0)

    # Deterministic order: by value first, then stably by magnitude
    by_value = np.argsort(-values, kind="stable")
    values, vectors = values[by_value], vectors[:, by_value]
    by_magnitude = np.argsort(-np.abs(values), kind="stable")[:k]
    values, vectors = values[by_magnitude], vectors[:, by_magnitude]

    phi = vectors / root[:, None]
    phi /= np.linalg.norm(phi, axis=0)

    # Sign convention: the largest-magnitude entry of each column is positive
    pivots = np.argmax(np.abs(phi), axis=0)
    signs = np.sign(phi[pivots, np.arange(k)])
    signs[signs == 0] = 1.0
    phi *= signs
    vectors = vectors * signs

    return DiffusionResult(
        eigenvalues=values,
        eigenvectors=phi,
        epsilon=markov.epsilon,
        alpha=markov.alpha,
        tau=0,
        dtilde=markov.dtilde,
        symmetric_vectors=vectors,
    )


def analytic_to_discrete_eigenvalue(mu_tilde: float, epsilon: float) -> float:
    """Discrete eigenvalue exp(-epsilon^2 mu~ / 4) of a continuous Laplacian eigenvalue mu~"""
    if mu_tilde < 0:
        raise InvalidParameter(f"mu_tilde must be nonnegative, got {mu_tilde}")
    if not epsilon > 0:
        raise InvalidParameter(f"epsilon must be positive, got {epsilon}")
    return float(np.exp(-epsilon ** 2 * mu_tilde / 4.0))


def _check_indices(result: DiffusionResult, indices: Sequence[int]) -> Tuple[int, ...]:
    chosen = tuple(sorted({int(k) for k in indices}))
    if not chosen:
        raise InvalidParameter("At least one eigenvector index is required")
    if chosen[0] == 0:
        raise InvalidParameter("Index 0 is the trivial constant eigenvector")
    if chosen[0] < 0 or chosen[-1] >= result.num_components:
        raise InvalidParameter(f"Eigenvector indices must lie in [1, {result.num_components - 1}], got {chosen}")
    return chosen


def embed(result: DiffusionResult, indices: Sequence[int], tau: int = 0) -> Embedding:
    """Diffusion maps coordinates for the given eigenvector indices"""
    if tau < 0:
        raise InvalidParameter(f"tau must be nonnegative, got {tau}")
    chosen = _check_indices(result, indices)
    columns = list(chosen)
    coords = result.eigenvectors[:, columns] * result.eigenvalues[columns] ** tau
    return Embedding(coords=coords, selected_indices=chosen, tau=int(tau))


def diffusion_distance(result: DiffusionResult, i: int, j: int, tau: int = 0,
                       indices: Optional[Sequence[int]] = None) -> float:
    """
    Diffusion distance between observations i and j.

    With all nontrivial indices this is the truncated standard diffusion
    distance; with the unique index set it is the reduced diffusion distance.
    """
    m = result.m
    if not (0 <= i < m and 0 <= j < m):
        raise InvalidParameter(f"Observation indices must lie in [0, {m - 1}], got ({i}, {j})")
    chosen = list(_check_indices(result, indices if indices is not None else result.nontrivial_indices()))
    weights = result.eigenvalues[chosen] ** (2 * tau)
    delta = result.eigenvectors[i, chosen] - result.eigenvectors[j, chosen]
    return float(np.sqrt(np.sum(weights * delta ** 2)))


def diffusion_distance_matrix(result: DiffusionResult, tau: int = 0,
                              indices: Optional[Sequence[int]] = None) -> np.ndarray:
    """All-pairs diffusion distances"""
    chosen = indices if indices is not None else result.nontrivial_indices()
    coords = embed(result, chosen, tau).coords
    return squareform(pdist(coords, metric="euclidean"))
