import numpy as np
import pytest

from dmaps.geometry import DistanceMatrix, ObservationSet, build_markov, euclidean_distances, median_pairwise
from dmaps.manifolds import sample_strip
from dmaps.models import JumpConfig, Metric, ObservationKind, StripSpec
from dmaps.spectral import eigendecompose


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_strip():
    spec = StripSpec(l1=4.0, l2=1.0, m=300, seed=3)
    return sample_strip(spec, return_latent=True)


@pytest.fixture
def strip_result(small_strip):
    obs, _ = small_strip
    d = euclidean_distances(obs)
    markov = build_markov(d, median_pairwise(d), alpha=1.0)
    return eigendecompose(markov, 10, solver="dense")


@pytest.fixture
def random_histograms(rng):
    counts = rng.random((20, 8))
    return ObservationSet(counts / counts.sum(axis=1, keepdims=True), ObservationKind.HISTOGRAMS)


@pytest.fixture
def jump_config():
    return JumpConfig(n_cells=400, speed=1.0, switch_rate=1.0, p_right=0.5, t_max=4.0, dt=1.0, seed=9)


def two_point_distances(distance: float) -> DistanceMatrix:
    return DistanceMatrix(d=np.array([[0.0, distance], [distance, 0.0]]), metric=Metric.EUCLIDEAN)
