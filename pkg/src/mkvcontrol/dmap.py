"""Diffusion-map approximation of the generator semigroup.

Given an anchor ensemble X^(1..M) and the state-dependent noise
covariance Sigma, the kernel

    R_ij = exp(-(X^i - X^j)^T (Sigma(X^i) + Sigma(X^j))^-1 (X^i - X^j)
               / (2 eps))

is scaled by a Sinkhorn vector v so that P = D(v) R D(v) has all row
and column sums equal to 1/M.  Out-of-sample evaluation through the
probability vector p(x) = D(v) r(x) / (v^T r(x)) gives the semigroup
action on the identity map, and

    (semigroup_apply(x) - x) / eps  ~  div Sigma(x) + Sigma(x) grad log pi(x)

estimates the grad-log density group from samples alone.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConvergenceError, FullRankViolationError

DEFAULT_SINKHORN_TOL = 1e-8
DEFAULT_SINKHORN_MAX_ITER = 10_000


@dataclass
class DiffusionMapOperator:
    """Anchor ensemble with its Sinkhorn-normalised kernel data."""

    anchors: np.ndarray            # (d, M)
    sigma_at_anchors: np.ndarray   # (M, d, d)
    bandwidth: float
    scaling: np.ndarray            # (M,), strictly positive
    row_residual: float = 0.0      # max |row sum of P - 1/M| at convergence
    col_residual: float = 0.0
    sigma_fn: Optional[Callable] = None  # Sigma(x) for out-of-sample points

    @property
    def size(self):
        return self.anchors.shape[1]


def build_kernel(anchors, sigma_at_anchors, eps_dm):
    """Pairwise Gaussian kernel matrix with state-dependent metric."""
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    sigma_at_anchors = np.asarray(sigma_at_anchors, dtype=float)
    d, m = anchors.shape
    if m < 2:
        raise FullRankViolationError("need at least 2 anchors")
    diffs = anchors.T[:, None, :] - anchors.T[None, :, :]        # (M, M, d)
    ssum = sigma_at_anchors[:, None] + sigma_at_anchors[None, :]  # (M, M, d, d)
    try:
        sol = np.linalg.solve(ssum, diffs[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        dets = np.linalg.det(ssum)
        bad = np.argwhere(np.abs(dets) < np.finfo(float).tiny)
        pair = tuple(bad[0]) if len(bad) else ("?", "?")
        raise FullRankViolationError(
            f"singular pairwise Sigma sum at anchor pair {pair}") from exc
    quad = np.einsum("ijk,ijk->ij", diffs, sol)
    return np.exp(-0.5 * quad / eps_dm)


def sinkhorn(kernel, tol=DEFAULT_SINKHORN_TOL,
             max_iter=DEFAULT_SINKHORN_MAX_ITER, return_history=False):
    """Symmetric Sinkhorn scaling: find v > 0 with row sums of
    D(v) K D(v) within ``tol`` of 1/M.

    Uses the fixed-point iteration v <- sqrt(v / (M K v)).
    """
    kernel = np.asarray(kernel, dtype=float)
    m = kernel.shape[0]
    v = np.full(m, 1.0 / np.sqrt(m * kernel.sum() / m))
    history = []
    for _ in range(max_iter):
        rowsums = v * (kernel @ v)
        residual = np.abs(rowsums - 1.0 / m).max()
        history.append(residual)
        if residual <= tol:
            if return_history:
                return v, history
            return v
        v = np.sqrt(v / (m * (kernel @ v)))
    raise ConvergenceError(
        f"sinkhorn did not converge in {max_iter} iterations "
        f"(residual {history[-1]:.3e})", residual=history[-1])


def build_operator(anchors, sigma_fn, eps_dm, tol=DEFAULT_SINKHORN_TOL,
                   max_iter=DEFAULT_SINKHORN_MAX_ITER) -> DiffusionMapOperator:
    """Build the normalised operator from an anchor ensemble and Sigma."""
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    m = anchors.shape[1]
    sigmas = np.stack([np.atleast_2d(sigma_fn(anchors[:, i]))
                       for i in range(m)])
    kernel = build_kernel(anchors, sigmas, eps_dm)
    v = sinkhorn(kernel, tol=tol, max_iter=max_iter)
    p = (v[:, None] * kernel) * v[None, :]
    row_res = np.abs(p.sum(axis=1) - 1.0 / m).max()
    col_res = np.abs(p.sum(axis=0) - 1.0 / m).max()
    return DiffusionMapOperator(anchors=anchors, sigma_at_anchors=sigmas,
                                bandwidth=eps_dm, scaling=v,
                                row_residual=row_res, col_residual=col_res,
                                sigma_fn=sigma_fn)


def membership_weights(op: DiffusionMapOperator, x, sigma_x=None):
    """Probability vector p(x) = D(v) r(x) / (v^T r(x)).

    Entries are nonnegative and sum to one, so op.anchors @ p lies in
    the convex hull of the anchors.  ``sigma_x`` defaults to the
    operator's Sigma map when available, else the first anchor's Sigma
    (exact for constant noise).
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if sigma_x is None:
        if op.sigma_fn is not None:
            sigma_x = np.atleast_2d(op.sigma_fn(x))
        else:
            sigma_x = op.sigma_at_anchors[0]
    diffs = op.anchors.T - x[None, :]                    # (M, d)
    ssum = op.sigma_at_anchors + np.asarray(sigma_x)[None, :, :]
    sol = np.linalg.solve(ssum, diffs[..., None])[..., 0]
    expo = -0.5 * np.einsum("ij,ij->i", diffs, sol) / op.bandwidth
    # shift exponents before exponentiating; p is scale invariant in r
    r = np.exp(expo - expo.max())
    w = op.scaling * r
    return w / w.sum()


def semigroup_apply(op: DiffusionMapOperator, x, sigma_x=None):
    """Approximate semigroup action on the identity map at x."""
    p = membership_weights(op, x, sigma_x=sigma_x)
    return op.anchors @ p


def grad_log_estimate(op: DiffusionMapOperator, x, sigma_x=None):
    """Estimate of div Sigma(x) + Sigma(x) grad log pi(x)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return (semigroup_apply(op, x, sigma_x=sigma_x) - x) / op.bandwidth
