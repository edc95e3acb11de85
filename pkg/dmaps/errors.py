"""
Exception types raised across the diffusion maps pipeline.
"""
from typing import Dict, Optional


class DmapsError(Exception):
    """Base class for every error the package raises on purpose"""


class InvalidData(DmapsError, ValueError):
    """Input data violates a structural invariant (shape, finiteness, normalization)"""


class InvalidParameter(DmapsError, ValueError):
    """A parameter is outside its admissible range"""


class DegenerateData(DmapsError, ValueError):
    """Data is valid but carries no usable scale (e.g. all distances zero)"""


class ConfigError(DmapsError, ValueError):
    """Pipeline configuration is inconsistent with the dataset"""


class NumericalFailure(DmapsError, RuntimeError):
    """A numerical routine did not converge"""

    def __init__(self, message: str, diagnostics: Optional[Dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}

    def __str__(self) -> str:
        base = super().__str__()
        if not self.diagnostics:
            return base
        details = ", ".join(f"{key}={value}" for key, value in self.diagnostics.items())
        return f"{base} ({details})"


class SchemaMismatch(DmapsError, ValueError):
    """A serialized report was written with an unsupported schema version"""

    def __init__(self, expected: int, found):
        super().__init__(f"Unsupported report schema version: expected {expected}, found {found}")
        self.expected = expected
        self.found = found
