"""
End-to-end analysis: dataset -> distances -> Markov matrix -> spectrum -> residuals -> report.
"""
import hashlib
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from dmaps.chemotaxis import build_ensemble, correlation_report, latent_correlations
from dmaps.errors import DmapsError, InvalidData, InvalidParameter
from dmaps.geometry import ObservationSet, build_markov, median_pairwise, pairwise_distances
from dmaps.manifolds import sample_strip, sample_swiss_roll, sample_torus, spectrum_comparison
from dmaps.models import (
    AnalysisReport, AnalyticRow, Density, JumpConfig, PipelineConfig, Provenance, StripSpec, stable_hash,
)
from dmaps.selection import (
    equivalence_check, relative_lengths, score_all, unique_pair_ratio,
)
from dmaps.spectral import DiffusionResult, Embedding, eigendecompose, embed

logger = logging.getLogger(__name__)

DATASET_KINDS = ("strip", "swissroll", "torus", "chemotaxis")


@dataclass
class Dataset:
    """Observations plus the latent variables and parameters that generated them"""
    kind: str
    observations: ObservationSet
    params: Dict = field(default_factory=dict)
    seed: int = 0
    latent: Optional[pd.DataFrame] = None
    run_ids: Optional[np.ndarray] = None
    bin_edges: Optional[np.ndarray] = None
    dataset_hash: Optional[str] = None

    @property
    def m(self) -> int:
        return self.observations.m

    def fingerprint(self) -> str:
        """Hash of the written CSV when known, otherwise of the raw observation bytes"""
        if self.dataset_hash:
            return self.dataset_hash
        return hashlib.sha256(np.ascontiguousarray(self.observations.vectors).tobytes()).hexdigest()[:16]

    def config_hash(self) -> str:
        return stable_hash({"kind": self.kind, "params": self.params, "seed": self.seed})


@dataclass
class AnalysisOutcome:
    report: AnalysisReport
    result: DiffusionResult
    full_embedding: Embedding
    reduced_embedding: Embedding
    analytic: Optional[pd.DataFrame] = None


# ============================================================================
# DATASET GENERATION
# ============================================================================

def generate_dataset(kind: str, params: Optional[Dict] = None, seed: int = 0, n_jobs: int = 1) -> Dataset:
    """
    Generate one of the synthetic or simulated datasets.

    Args:
        kind: strip, swissroll, torus or chemotaxis
        params: generator parameters; missing ones take their defaults
        seed: random seed
        n_jobs: joblib workers for the chemotaxis simulation

    Returns:
        Dataset whose params echo every value used
    """
    params = dict(params or {})
    if kind == "strip":
        spec = StripSpec(l1=params.get("l1", 4.0), l2=params.get("l2", 1.0), m=params.get("m", 2000),
                         density=params.get("density", Density.UNIFORM), seed=seed)
        obs, latent = sample_strip(spec, return_latent=True)
        used = spec.model_dump(mode="json", exclude={"seed"})
    elif kind == "swissroll":
        used = {"h": params.get("h", 40.0), "m": params.get("m", 1500),
                "theta_min": params.get("theta_min", 1.5 * np.pi), "theta_max": params.get("theta_max", 4.5 * np.pi)}
        obs, latent = sample_swiss_roll(seed=seed, return_latent=True, **used)
    elif kind == "torus":
        used = {"r1": params.get("r1", 10.0), "r2": params.get("r2", 1.0), "m": params.get("m", 3000)}
        obs, latent = sample_torus(seed=seed, return_latent=True, **used)
    elif kind == "chemotaxis":
        return _generate_chemotaxis(params, seed, n_jobs)
    else:
        raise InvalidParameter(f"Unknown dataset kind {kind!r}; expected one of {', '.join(DATASET_KINDS)}")

    logger.info(f"Generated {kind} dataset: m={obs.m}, seed={seed}")
    return Dataset(kind=kind, observations=obs, params=used, seed=seed, latent=latent)


def _generate_chemotaxis(params: Dict, seed: int, n_jobs: int) -> Dataset:
    base = JumpConfig(
        n_cells=params.get("n_cells", 1000),
        speed=params.get("speed", 1.0),
        switch_rate=params.get("switch_rate", 1.0),
        t_max=params.get("t_max", 10.0),
        dt=params.get("dt", 1.0),
        seed=seed,
    )
    runs = params.get("runs", 10)
    n_bins = params.get("n_bins", 32)
    random_p = bool(params.get("random_p", False))
    ensemble, latent = build_ensemble(base, runs=runs, p_values=params.get("p_values"),
                                      random_p=random_p, n_bins=n_bins, n_jobs=n_jobs)
    used = base.model_dump(mode="json", exclude={"seed", "p_right"})
    used.update({"runs": runs, "n_bins": n_bins, "random_p": random_p,
                 "p_values": sorted(set(float(p) for p in ensemble.p))})
    return Dataset(kind="chemotaxis", observations=ensemble.observations(), params=used, seed=seed,
                   latent=latent, run_ids=ensemble.run_ids, bin_edges=ensemble.bin_edges)


# ============================================================================
# ANALYSIS
# ============================================================================

def _spectrum_rows(table: pd.DataFrame) -> List[AnalyticRow]:
    return [AnalyticRow(k=int(row.k), empirical=float(row.empirical), analytic=float(row.analytic),
                        k1=int(row.k1), k2=int(row.k2)) for row in table.itertuples()]


def run_analysis(dataset: Dataset, config: PipelineConfig, n_jobs: int = 1, warn_size: int = 5000) -> AnalysisOutcome:
    """
    Run the full diffusion maps analysis on a dataset.

    Args:
        dataset: observations with optional latent table
        config: metric, kernel, spectrum and selection settings
        n_jobs: joblib workers for the LOOCV scoring
        warn_size: m above which the LOOCV complexity warning is logged

    Returns:
        AnalysisOutcome holding the serializable report and the embeddings
    """
    warnings: List[str] = []
    obs = dataset.observations

    distances = pairwise_distances(obs, config.metric)
    epsilon = config.epsilon if config.epsilon is not None else median_pairwise(distances)
    logger.info(f"Distances computed ({config.metric.value}), epsilon={epsilon:.6g}")

    markov = build_markov(distances, epsilon, config.alpha)
    k_total = min(config.num_eigen, obs.m)
    result = eigendecompose(markov, k_total, solver=config.eigen_solver)
    if config.tau:
        result = replace(result, tau=config.tau)

    residuals = score_all(result, config.selection, method=config.loocv_method, ridge=config.ridge,
                          n_jobs=n_jobs, warn_size=warn_size)
    unique = residuals.unique_indices
    if not unique:
        warnings.append("no eigendirection passed the selection criterion; reduced embedding uses index 1")

    lengths: List[float] = []
    if unique:
        try:
            lengths = relative_lengths(result, unique).tolist()
        except InvalidParameter as exc:
            warnings.append(f"relative lengths unavailable: {exc}")
        if config.alpha != 1.0:
            warnings.append(f"relative lengths assume uniform sampling; alpha={config.alpha}")

    ratio, pair, from_fallback = None, None, False
    try:
        ratio, pair, from_fallback = unique_pair_ratio(result, residuals)
        if from_fallback:
            warnings.append(f"fewer than two unique directions; ratio uses top residual indices {list(pair)}")
    except InvalidParameter as exc:
        warnings.append(f"dimensionality ratio unavailable: {exc}")

    reduced_indices = unique or [1]
    full = embed(result, result.nontrivial_indices(), config.tau)
    reduced = embed(result, reduced_indices, config.tau)

    correlations, per_latent = None, None
    if dataset.latent is not None and len(dataset.latent) == obs.m:
        per_latent = latent_correlations(reduced, dataset.latent)
        if pair is not None and {"p", "t"} <= set(dataset.latent.columns):
            try:
                correlations = correlation_report(embed(result, pair, config.tau), dataset.latent)
            except InvalidData as exc:
                warnings.append(f"correlations unavailable: {exc}")

    analytic = None
    if dataset.kind == "strip" and {"l1", "l2"} <= set(dataset.params):
        analytic = spectrum_comparison(result, dataset.params["l1"], dataset.params["l2"])

    equivalence = equivalence_check(result, reduced_indices, tau=config.tau,
                                    sample_pairs=config.equivalence_pairs, seed=config.seed)
    if equivalence.lipschitz_violations:
        warnings.append(f"{equivalence.lipschitz_violations} pairs violate the Lipschitz assumption")

    report = AnalysisReport(
        dataset_kind=dataset.kind,
        metric=config.metric,
        alpha=config.alpha,
        epsilon=float(epsilon),
        tau=config.tau,
        spectrum=result.eigenvalues.tolist(),
        residuals=residuals,
        unique_indices=unique,
        relative_lengths=lengths,
        dimensionality_ratio=ratio,
        ratio_from_fallback=from_fallback,
        correlations=correlations,
        latent_correlations=per_latent,
        analytic_spectrum=_spectrum_rows(analytic) if analytic is not None else None,
        equivalence=equivalence,
        warnings=warnings,
        provenance=Provenance(config_hash=config.config_hash(), dataset_hash=dataset.fingerprint(), seed=config.seed),
    )
    for message in warnings:
        logger.warning(message)
    logger.info(f"Analysis done: unique={unique}, ratio={ratio}")
    return AnalysisOutcome(report=report, result=result, full_embedding=full, reduced_embedding=reduced,
                           analytic=analytic)


def analyze_safely(dataset: Dataset, config: PipelineConfig, n_jobs: int = 1) -> Optional[AnalysisOutcome]:
    """run_analysis that logs and swallows pipeline errors (used by grid sweeps)"""
    try:
        return run_analysis(dataset, config, n_jobs=n_jobs)
    except DmapsError as exc:
        logger.warning(f"Analysis of {dataset.kind} dataset failed: {exc}")
        return None
