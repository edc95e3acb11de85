"""
Pydantic models for configuration, generator parameters and serialized reports.
"""
import hashlib
import json
import math
from enum import Enum
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

SCHEMA_VERSION = 1


class ObservationKind(str, Enum):
    """How rows of an observation matrix are to be read"""
    RAW_POINTS = "raw_points"
    HISTOGRAMS = "histograms"


class Metric(str, Enum):
    """Distance between two observations"""
    EUCLIDEAN = "euclidean"
    EMD = "emd"


class Density(str, Enum):
    """Sampling density along the long axis of a strip"""
    UNIFORM = "uniform"
    GAUSSIAN_IN_Z1 = "gaussian_in_z1"


def stable_hash(payload: Dict) -> str:
    """Short SHA-256 of a JSON-able dict with sorted keys"""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def finite_or_none(value: Optional[float]) -> Optional[float]:
    """Map NaN/inf to None so reports stay valid JSON"""
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


# ============================================================================
# CONFIGURATION
# ============================================================================

class SelectionCriterion(BaseModel):
    """Rule turning residuals r_k into the unique index set"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["threshold", "top_d"] = "threshold"
    threshold: float = Field(0.5, ge=0.0)
    top_d: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _check_top_d(self):
        if self.kind == "top_d" and self.top_d is None:
            raise ValueError("top_d criterion requires a value for top_d")
        return self

    @classmethod
    def by_threshold(cls, threshold: float) -> "SelectionCriterion":
        return cls(kind="threshold", threshold=threshold)

    @classmethod
    def by_count(cls, count: int) -> "SelectionCriterion":
        return cls(kind="top_d", top_d=count)

    def describe(self) -> str:
        if self.kind == "top_d":
            return f"top_d({self.top_d})"
        return f"threshold({self.threshold:g})"


class PipelineConfig(BaseModel):
    """Everything that determines the outcome of one analysis"""
    model_config = ConfigDict(frozen=True)

    metric: Metric = Metric.EUCLIDEAN
    alpha: float = Field(1.0, ge=0.0, le=1.0)
    epsilon: Optional[float] = Field(None, gt=0.0)  # None = median heuristic
    num_eigen: int = Field(20, ge=3)
    tau: int = Field(0, ge=0)
    selection: SelectionCriterion = SelectionCriterion()
    seed: int = 0
    eigen_solver: Literal["arpack", "dense"] = "arpack"
    loocv_method: Literal["direct", "hat"] = "direct"
    ridge: float = Field(1e-10, ge=0.0)
    equivalence_pairs: int = Field(10000, ge=1)

    def config_hash(self) -> str:
        return stable_hash(self.model_dump(mode="json"))


# ============================================================================
# GENERATOR PARAMETERS
# ============================================================================

class StripSpec(BaseModel):
    """Rectangle [0, l1] x [0, l2] sampled with the given density"""
    l1: float = Field(..., gt=0)
    l2: float = Field(..., gt=0)
    m: int = Field(..., ge=2)
    density: Density = Density.UNIFORM
    seed: int = 0

    @model_validator(mode="after")
    def _long_axis_first(self):
        if self.l1 < self.l2:
            raise ValueError("l1 must be the long axis (l1 >= l2)")
        return self


class AnalyticMode(BaseModel):
    """Neumann eigenmode of the strip Laplacian"""
    model_config = ConfigDict(frozen=True)

    k1: int = Field(..., ge=0)
    k2: int = Field(..., ge=0)
    mu_tilde: float = Field(..., ge=0)


class JumpConfig(BaseModel):
    """Parameters of the one-dimensional velocity jump process"""
    model_config = ConfigDict(frozen=True)

    n_cells: int = Field(1000, ge=1)
    speed: float = Field(..., gt=0)
    switch_rate: float = Field(..., ge=0)
    p_right: float = Field(0.5, gt=0, lt=1)
    t_max: float = Field(..., gt=0)
    dt: float = Field(..., gt=0)
    seed: int = 0

    @model_validator(mode="after")
    def _whole_number_of_snapshots(self):
        if self.dt > self.t_max:
            raise ValueError("dt must not exceed t_max")
        ratio = self.t_max / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError("t_max / dt must be a whole number of snapshots")
        return self

    @property
    def n_snapshots(self) -> int:
        return int(round(self.t_max / self.dt))

    @property
    def t_obs(self) -> float:
        return self.t_max / self.n_cells


# ============================================================================
# REPORTS
# ============================================================================

class ResidualReport(BaseModel):
    """Leave-one-out residuals of every nontrivial eigenvector"""
    residuals: List[float]  # residuals[k - 1] = r_k
    unique_indices: List[int]
    criterion: str
    threshold: Optional[float] = None
    eps_reg_used: List[Optional[float]]  # None for k = 1 (no regression)

    def residual(self, k: int) -> float:
        return self.residuals[k - 1]


class EquivalenceReport(BaseModel):
    """Sandwich bound between reduced and full diffusion distances"""
    holds: bool
    worst_slack: float
    k_est: float
    pairs_checked: int
    lipschitz_violations: int = 0
    tau: int = 0


class CorrelationReport(BaseModel):
    """Matched absolute correlations of a 2-D embedding with (p, t)"""
    corr_p: float
    corr_t: float
    assignment: Dict[str, int]  # latent variable -> eigenvector index


class AnalyticRow(BaseModel):
    k: int
    empirical: float
    analytic: float
    k1: int
    k2: int


class Provenance(BaseModel):
    config_hash: str
    dataset_hash: str
    seed: int

    @model_validator(mode="after")
    def _non_empty(self):
        if not self.config_hash or not self.dataset_hash:
            raise ValueError("provenance hashes must be non-empty")
        return self


class AnalysisReport(BaseModel):
    """Self-describing summary of one diffusion maps analysis"""
    model_config = ConfigDict(extra="ignore")

    schema_version: int = SCHEMA_VERSION
    dataset_kind: str
    metric: Metric
    alpha: float
    epsilon: float
    tau: int
    spectrum: List[float]
    residuals: ResidualReport
    unique_indices: List[int]
    relative_lengths: List[float] = []
    dimensionality_ratio: Optional[float] = None
    ratio_from_fallback: bool = False
    correlations: Optional[CorrelationReport] = None
    latent_correlations: Optional[Dict[str, Dict[str, Optional[float]]]] = None
    analytic_spectrum: Optional[List[AnalyticRow]] = None
    equivalence: EquivalenceReport
    warnings: List[str] = []
    provenance: Provenance


class DatasetMeta(BaseModel):
    """JSON sidecar describing a dataset CSV"""
    model_config = ConfigDict(extra="ignore")

    schema_version: int = SCHEMA_VERSION
    kind: Literal["strip", "swissroll", "torus", "chemotaxis", "custom"]
    observation_kind: ObservationKind
    params: Dict
    seed: int
    n_rows: int
    ambient_columns: List[str]
    latent_columns: List[str]
    bin_edges: Optional[List[float]] = None
    dataset_hash: str
    config_hash: str


class SweepGrid(BaseModel):
    """Mean dimensionality ratios over a (switch rate, observation time) grid"""
    model_config = ConfigDict(extra="ignore")

    schema_version: int = SCHEMA_VERSION
    lambdas: List[float]
    t_obs_values: List[float]
    ratios: List[List[Optional[float]]]  # [lambda][t_obs]
    replicate_ratios: List[List[List[Optional[float]]]]
    warnings: List[List[bool]]
    replicates: int
    n_cells: int
    boundary: List[float]  # t_obs = 1 / lambda for each lambda
    level_set: List[Optional[float]] = []
    provenance: Optional[Provenance] = None
