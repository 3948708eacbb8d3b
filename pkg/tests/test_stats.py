"""Tests for ensembles and inflated empirical moments."""

import numpy as np
import pytest

from mkvcontrol import (DimensionError, Ensemble, EmpiricalMoments,
                        InsufficientEnsembleError, cross_cov, moments)


def test_moments_two_particles():
    e = Ensemble(particles=np.array([[0.0, 2.0]]))
    mom = moments(e, 0.0)
    assert mom.mean[0] == pytest.approx(1.0)
    assert mom.cov[0, 0] == pytest.approx(2.0)


def test_moments_identical_particles_inflated():
    e = Ensemble(particles=np.full((2, 5), 3.0))
    mom = moments(e, 1e-4)
    assert np.allclose(mom.mean, 3.0)
    assert np.allclose(mom.cov, 1e-4 * np.eye(2))


def test_moments_monte_carlo():
    rng = np.random.default_rng(7)
    e = Ensemble(particles=rng.standard_normal((2, 10000)))
    mom = moments(e, 0.0)
    assert np.abs(mom.cov - np.eye(2)).max() < 0.1


def test_moments_requires_two_particles():
    e = Ensemble(particles=np.array([[1.0]]))
    with pytest.raises(InsufficientEnsembleError):
        moments(e)


def test_moments_rejects_negative_inflation():
    e = Ensemble(particles=np.array([[0.0, 1.0]]))
    with pytest.raises(DimensionError):
        moments(e, -1e-3)


def test_ensemble_rejects_nonfinite():
    with pytest.raises(DimensionError):
        Ensemble(particles=np.array([[0.0, np.nan]]))


def test_cov_minus_inflation_is_psd():
    rng = np.random.default_rng(3)
    e = Ensemble(particles=rng.standard_normal((3, 20)))
    mom = moments(e, 0.5)
    vals = np.linalg.eigvalsh(mom.cov - 0.5 * np.eye(3))
    assert vals.min() > -1e-12
    assert np.allclose(mom.cov, mom.cov.T)


def test_cross_cov_identity_matches_cov():
    rng = np.random.default_rng(11)
    e = Ensemble(particles=rng.standard_normal((2, 50)))
    assert np.allclose(cross_cov(e, lambda x: x), moments(e, 0.0).cov)


def test_cross_cov_constant_map_is_zero():
    rng = np.random.default_rng(5)
    e = Ensemble(particles=rng.standard_normal((2, 30)))
    assert np.allclose(cross_cov(e, lambda x: np.array([4.2])), 0.0)


def test_cross_cov_odd_symmetry():
    e = Ensemble(particles=np.array([[-1.0, 1.0]]))
    assert np.allclose(cross_cov(e, lambda x: x ** 2), 0.0)


def test_translation_equivariance():
    rng = np.random.default_rng(13)
    x = rng.standard_normal((2, 40))
    v = np.array([1.5, -2.0])
    e = Ensemble(particles=x)
    e_shift = Ensemble(particles=x + v[:, None])
    m0, m1 = moments(e, 0.0), moments(e_shift, 0.0)
    assert np.allclose(m1.mean, m0.mean + v)
    assert np.allclose(m1.cov, m0.cov)
    assert np.allclose(cross_cov(e_shift, lambda y: y), cross_cov(e, lambda y: y))


def test_moments_solve_matches_direct_inverse():
    rng = np.random.default_rng(17)
    e = Ensemble(particles=rng.standard_normal((3, 25)))
    mom = moments(e, 1e-6)
    y = rng.standard_normal(3)
    assert np.allclose(mom.solve(y), np.linalg.solve(mom.cov, y))
    assert np.allclose(mom.inv(), np.linalg.inv(mom.cov))


def test_empirical_moments_direct_construction():
    mom = EmpiricalMoments(mean=np.zeros(1), cov=np.array([[4.0]]))
    assert mom.solve(np.array([2.0]))[0] == pytest.approx(0.5)
