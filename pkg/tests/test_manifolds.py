"""Tests for the strip, Swiss roll and torus generators and the strip spectrum."""
import numpy as np
import pytest
from pydantic import ValidationError
from scipy import stats

from dmaps.errors import InvalidParameter
from dmaps.manifolds import (
    SWISS_ROLL_THETA_MAX, SWISS_ROLL_THETA_MIN, arclength, invert_arclength, sample_strip, sample_swiss_roll,
    sample_torus, strip_eigenfunction, strip_spectrum,
)
from dmaps.models import AnalyticMode, Density, PipelineConfig, StripSpec
from dmaps.pipeline import generate_dataset, run_analysis


# =============================================================================
# Strip
# =============================================================================

def test_strip_is_deterministic():
    spec = StripSpec(l1=3.0, l2=1.0, m=4, seed=11)
    assert np.array_equal(sample_strip(spec).vectors, sample_strip(spec).vectors)


@pytest.mark.parametrize("density", [Density.UNIFORM, Density.GAUSSIAN_IN_Z1])
def test_strip_support(density):
    obs = sample_strip(StripSpec(l1=4.0, l2=1.0, m=2000, density=density, seed=1))
    z = obs.vectors
    assert z.shape == (2000, 2)
    assert np.all((z[:, 0] >= 0) & (z[:, 0] <= 4.0))
    assert np.all((z[:, 1] >= 0) & (z[:, 1] <= 1.0))


def test_uniform_strip_mean():
    obs = sample_strip(StripSpec(l1=4.0, l2=1.0, m=2000, seed=5))
    standard_error = 4.0 / np.sqrt(12.0 * 2000)
    assert abs(obs.vectors[:, 0].mean() - 2.0) < 3 * standard_error


def test_gaussian_strip_concentrates_in_middle():
    uniform = sample_strip(StripSpec(l1=4.0, l2=1.0, m=2000, seed=2)).vectors[:, 0]
    gaussian = sample_strip(StripSpec(l1=4.0, l2=1.0, m=2000, density=Density.GAUSSIAN_IN_Z1, seed=2)).vectors[:, 0]
    assert gaussian.std() < uniform.std()


def test_strip_latent_matches_points(small_strip):
    obs, latent = small_strip
    assert list(latent.columns) == ["z1", "z2"]
    assert np.array_equal(latent[["z1", "z2"]].to_numpy(), obs.vectors)


def test_strip_spec_rejects_short_long_axis():
    with pytest.raises(ValidationError):
        StripSpec(l1=1.0, l2=2.0, m=10)


def test_strip_spectrum_constant_mode():
    modes = strip_spectrum(2.0, 1.0, 3)
    assert (modes[0].k1, modes[0].k2, modes[0].mu_tilde) == (0, 0, 0.0)
    z = np.array([[0.3, 0.7], [1.9, 0.1]])
    assert np.all(strip_eigenfunction(modes[0], 2.0, 1.0, z) == 1.0)


def test_strip_spectrum_unit_square():
    modes = strip_spectrum(1.0, 1.0, 2)
    first = next(mode for mode in modes if (mode.k1, mode.k2) == (1, 0))
    assert first.mu_tilde == pytest.approx(np.pi ** 2)
    assert first.mu_tilde == pytest.approx(9.8696, abs=1e-4)


def test_strip_spectrum_harmonic_before_second_axis():
    modes = {(mode.k1, mode.k2): mode.mu_tilde for mode in strip_spectrum(4.0, 1.0, 2)}
    assert modes[(2, 0)] < modes[(0, 1)]


def test_strip_spectrum_sorted_and_exhaustive():
    modes = strip_spectrum(3.0, 1.0, 4)
    assert len(modes) == 25
    values = [mode.mu_tilde for mode in modes]
    assert values == sorted(values)
    for mode in modes:
        assert mode.mu_tilde == (mode.k1 * np.pi / 3.0) ** 2 + (mode.k2 * np.pi / 1.0) ** 2


def test_strip_spectrum_rejects_k_max_zero():
    with pytest.raises(InvalidParameter):
        strip_spectrum(2.0, 1.0, 0)


def test_strip_eigenfunction_values():
    mode = AnalyticMode(k1=1, k2=1, mu_tilde=(np.pi / 2.0) ** 2 + np.pi ** 2)
    z = np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 0.5], [0.0, 1.0]])
    assert np.allclose(strip_eigenfunction(mode, 2.0, 1.0, z), [1.0, -1.0, 0.0, -1.0], atol=1e-15)


# =============================================================================
# Swiss roll
# =============================================================================

def test_arclength_at_origin():
    assert arclength(0.0) == 0.0


def test_arclength_round_trip(rng):
    u = rng.uniform(0.0, arclength(SWISS_ROLL_THETA_MAX), 1000)
    assert np.allclose(arclength(invert_arclength(u)), u, atol=1e-9, rtol=0)


def test_invert_arclength_rejects_negative():
    with pytest.raises(InvalidParameter):
        invert_arclength([-1.0])


def test_swiss_roll_radius_equals_theta():
    obs, latent = sample_swiss_roll(40.0, 500, seed=4, return_latent=True)
    z = obs.vectors
    theta = latent["theta"].to_numpy()
    assert np.allclose(z[:, 0] ** 2 + z[:, 1] ** 2, theta ** 2, rtol=1e-12)
    assert np.all((theta >= SWISS_ROLL_THETA_MIN - 1e-9) & (theta <= SWISS_ROLL_THETA_MAX + 1e-9))
    assert np.allclose(z[:, 2], 40.0 * latent["t"].to_numpy())


def test_swiss_roll_uniform_in_arclength():
    _, latent = sample_swiss_roll(40.0, 1500, seed=0, return_latent=True)
    s = arclength(latent["theta"].to_numpy())
    counts, _ = np.histogram(s, bins=20, range=(arclength(SWISS_ROLL_THETA_MIN), arclength(SWISS_ROLL_THETA_MAX)))
    assert stats.chisquare(counts).pvalue > 0.01


def test_swiss_roll_is_deterministic():
    first = sample_swiss_roll(20.0, 50, seed=8).vectors
    second = sample_swiss_roll(20.0, 50, seed=8).vectors
    assert np.array_equal(first, second)


@pytest.mark.parametrize("kwargs", [
    {"h": 40.0, "m": 10, "theta_min": 0.0},
    {"h": 40.0, "m": 10, "theta_min": 5.0, "theta_max": 4.0},
    {"h": 0.0, "m": 10},
    {"h": 40.0, "m": 1},
])
def test_swiss_roll_invalid_parameters(kwargs):
    with pytest.raises(InvalidParameter):
        sample_swiss_roll(**kwargs)


# =============================================================================
# Torus
# =============================================================================

def test_torus_on_implicit_surface():
    obs, latent = sample_torus(10.0, 1.0, 1000, seed=6, return_latent=True)
    z = obs.vectors
    lhs = (np.sqrt(z[:, 0] ** 2 + z[:, 1] ** 2) - 10.0) ** 2 + z[:, 2] ** 2
    assert np.allclose(lhs, 1.0, atol=1e-12)
    assert set(latent.columns) == {"theta1", "theta2"}


def test_torus_angles_uniform_range():
    _, latent = sample_torus(3.0, 1.0, 500, seed=1, return_latent=True)
    angles = latent.to_numpy()
    assert np.all((angles >= 0.0) & (angles < 2.0 * np.pi))


@pytest.mark.parametrize("r1,r2", [(1.0, 1.0), (1.0, 2.0), (3.0, 0.0)])
def test_torus_invalid_radii(r1, r2):
    with pytest.raises(InvalidParameter):
        sample_torus(r1, r2, 100)


# =============================================================================
# Acceptance runs
# =============================================================================

@pytest.mark.slow
@pytest.mark.parametrize("h,expected", [(40.0, [1, 2]), (20.0, [1, 5])])
def test_swiss_roll_unique_directions(h, expected):
    hits = 0
    for seed in range(5):
        dataset = generate_dataset("swissroll", {"h": h, "m": 1500}, seed=seed)
        report = run_analysis(dataset, PipelineConfig(seed=seed)).report
        hits += report.unique_indices[:2] == expected
    assert hits >= 4


@pytest.mark.slow
@pytest.mark.parametrize("r1,pair", [(3.0, (7, 8)), (5.0, (11, 12)), (10.0, (15, 16))])
def test_torus_second_unique_pair(r1, pair):
    dataset = generate_dataset("torus", {"r1": r1, "r2": 1.0, "m": 3000}, seed=0)
    report = run_analysis(dataset, PipelineConfig(num_eigen=20)).report
    unique = report.unique_indices
    assert unique[:2] == [1, 2]
    assert len(unique) >= 4
    assert abs(unique[2] - pair[0]) <= 2
    assert abs(unique[3] - pair[1]) <= 2
