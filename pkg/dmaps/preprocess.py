"""
Histogram observers turning cell positions into probability vectors.
"""
import logging
from typing import Iterable, List, Optional

import numpy as np
import pandas as pd

from dmaps.errors import InvalidData, InvalidParameter

logger = logging.getLogger(__name__)


class HistogramObserver:
    """Bins cell positions on equal-width bins shared by a whole ensemble"""

    def __init__(self, n_bins: int = 32):
        if n_bins < 1:
            raise InvalidParameter(f"n_bins must be at least 1, got {n_bins}")
        self.n_bins = n_bins
        self.bin_edges: Optional[np.ndarray] = None

    @property
    def columns(self) -> List[str]:
        width = max(2, len(str(self.n_bins)))
        return [f"bin_{i:0{width}d}" for i in range(1, self.n_bins + 1)]

    def fit(self, position_sets: Iterable[np.ndarray]) -> "HistogramObserver":
        """
        Span the bins over [min, max] of every pooled position.

        A degenerate range (all positions equal) is widened by 0.5 on each side.
        """
        pooled = [np.asarray(positions, dtype=float).ravel() for positions in position_sets]
        pooled = np.concatenate(pooled) if pooled else np.empty(0)
        if pooled.size == 0:
            raise InvalidData("No positions to build histogram bins from")
        if not np.all(np.isfinite(pooled)):
            raise InvalidData("Positions contain non-finite entries")

        low, high = float(pooled.min()), float(pooled.max())
        if high <= low:
            low, high = low - 0.5, high + 0.5
        self.bin_edges = np.linspace(low, high, self.n_bins + 1)
        logger.debug(f"Histogram bins fitted: {self.n_bins} bins on [{low:.6g}, {high:.6g}]")
        return self

    def transform(self, position_sets: Iterable[np.ndarray]) -> np.ndarray:
        """One normalized histogram row per position set"""
        if self.bin_edges is None:
            raise InvalidData("HistogramObserver.fit must be called before transform")
        low, high = self.bin_edges[0], self.bin_edges[-1]
        rows = []
        for positions in position_sets:
            positions = np.clip(np.asarray(positions, dtype=float).ravel(), low, high)
            if positions.size == 0:
                raise InvalidData("Cannot histogram an empty set of positions")
            counts, _ = np.histogram(positions, bins=self.bin_edges)
            rows.append(counts / positions.size)
        return np.vstack(rows)

    def fit_transform(self, position_sets: List[np.ndarray]) -> np.ndarray:
        return self.fit(position_sets).transform(position_sets)

    def to_frame(self, histograms: np.ndarray) -> pd.DataFrame:
        return pd.DataFrame(histograms, columns=self.columns)
