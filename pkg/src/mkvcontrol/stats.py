"""Ensembles and inflated empirical moments.

Particles are stored column-wise: an ensemble of M particles in d
dimensions is a (d, M) array.  All covariances use the unbiased
1/(M-1) normalisation, and the state covariance is regularised by an
additive inflation ``delta * I`` so that it stays invertible even for
very small ensembles.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DimensionError, InsufficientEnsembleError


@dataclass
class Ensemble:
    """M particles in R^d at a common time stamp, stored as (d, M)."""

    particles: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.particles = np.atleast_2d(np.asarray(self.particles, dtype=float))
        if self.particles.ndim != 2:
            raise DimensionError("particles must be a (d, M) array")
        if not np.all(np.isfinite(self.particles)):
            raise DimensionError("particles must be finite")

    @property
    def dim(self):
        return self.particles.shape[0]

    @property
    def size(self):
        return self.particles.shape[1]


@dataclass
class EmpiricalMoments:
    """Inflated empirical mean/covariance of an ensemble.

    ``cov`` already includes the additive inflation ``inflation * I``.
    """

    mean: np.ndarray
    cov: np.ndarray
    inflation: float = 0.0
    _factor: tuple = field(default=None, repr=False, compare=False)

    def solve(self, y):
        """cov^-1 y via a cached Cholesky factorization."""
        if self._factor is None:
            self._factor = cho_factor(self.cov, lower=True)
        return cho_solve(self._factor, np.asarray(y, dtype=float))

    def inv(self):
        d = self.cov.shape[0]
        return self.solve(np.eye(d))


def _require_size(e: Ensemble):
    if e.size < 2:
        raise InsufficientEnsembleError(
            f"need at least 2 particles, got {e.size}")


def moments(e: Ensemble, delta: float = 0.0) -> EmpiricalMoments:
    """Empirical mean and delta-inflated covariance of an ensemble."""
    _require_size(e)
    if delta < 0:
        raise DimensionError("inflation must be nonnegative")
    x = e.particles
    m = x.mean(axis=1)
    dx = x - m[:, None]
    cov = (dx @ dx.T) / (e.size - 1) + delta * np.eye(e.dim)
    return EmpiricalMoments(mean=m, cov=cov, inflation=delta)


def cross_cov(e: Ensemble, f) -> np.ndarray:
    """Empirical cross-covariance (1/(M-1)) sum (X^i - m)(f(X^i) - m^f)^T.

    No inflation is applied to cross-covariances.
    """
    _require_size(e)
    x = e.particles
    fx = np.column_stack([np.asarray(f(x[:, i]), dtype=float).reshape(-1)
                          for i in range(e.size)])
    dx = x - x.mean(axis=1)[:, None]
    df = fx - fx.mean(axis=1)[:, None]
    return (dx @ df.T) / (e.size - 1)


def map_moments(e: Ensemble, f):
    """Mean and (uninflated) auto-covariance of f over the ensemble."""
    _require_size(e)
    fx = np.column_stack([np.asarray(f(e.particles[:, i]), dtype=float).reshape(-1)
                          for i in range(e.size)])
    mf = fx.mean(axis=1)
    df = fx - mf[:, None]
    return mf, (df @ df.T) / (e.size - 1)
