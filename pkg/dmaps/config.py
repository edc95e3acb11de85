"""
Runtime configuration for the diffusion maps toolkit.

Values are read from the environment (prefix ``DMAPS_``) and from a local
``.env`` file; command line flags override them per invocation.
"""
from functools import lru_cache
from typing import Literal

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class Settings(BaseSettings):
    """Defaults for every pipeline stage"""

    model_config = SettingsConfigDict(env_prefix="DMAPS_", env_file=".env", extra="ignore")

    # Kernel and spectrum
    alpha: float = Field(1.0, ge=0.0, le=1.0)
    num_eigen: int = Field(20, ge=2)
    tau: int = Field(0, ge=0)
    eigen_solver: Literal["arpack", "dense"] = "arpack"

    # Eigendirection selection
    threshold: float = Field(0.5, ge=0.0)
    loocv_method: Literal["direct", "hat"] = "direct"
    loocv_warn_size: int = 5000
    ridge: float = Field(1e-10, ge=0.0)
    equivalence_pairs: int = Field(10000, ge=1)

    # Chemotaxis observers
    n_bins: int = Field(32, ge=1)
    n_cells: int = Field(1000, ge=1)
    n_runs: int = Field(10, ge=1)

    # Execution
    n_jobs: int = 1
    seed: int = 0
    output_dir: str = "results"
    data_dir: str = "data"
    log_level: str = "INFO"


@lru_cache
def get_settings() -> Settings:
    """Return the process-wide settings instance"""
    return Settings()
