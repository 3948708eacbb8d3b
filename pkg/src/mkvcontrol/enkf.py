"""Gaussian-closure (EnKF-type) drift approximations and control gains.

These are the moment-based approximations of the interaction terms in
the forward and reverse mean-field SDEs: the running-cost drift
correction, the grad-log-density groups evaluated through empirical
covariances, the stochastic EnKF update applied at the final time, and
the extraction of the affine gain pair (A_t, c_t) from forward and
reverse moments.

Sign convention for the reverse drift: the reverse sweep applies

    X_{n-1} = X_n + dt * reverse_drift(X_n) + sqrt(eps * dt) * sigma * noise,

and with b(x) = -x/2, Sigma = 1, G = R = 1 and unit Gaussian forward
moments the reverse drift equals -x/2 at eps = 1 (the classical
reverse-time Ornstein-Uhlenbeck sampler) and vanishes at eps = 0 for
matching stationary moments.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericalBlowupError
from .problem import ControlProblem
from .stats import Ensemble, EmpiricalMoments, map_moments


@dataclass
class GainPair:
    """Affine feedback gain A (symmetric) and shift c."""

    A: np.ndarray
    c: np.ndarray


def g_bar_kf(p: ControlProblem, x, Cxh, mh):
    """Running-cost drift correction (1/2) C^{xh} S^-1 (h(x) + m^h)."""
    h = np.asarray(p.running_map(x), dtype=float).reshape(-1)
    Cxh = np.atleast_2d(np.asarray(Cxh, dtype=float))
    return 0.5 * Cxh @ p.solve_s(h + mh)


def forward_drift(p: ControlProblem, x, bar: EmpiricalMoments, Cxh, mh,
                  eps_noise: float):
    """Drift of the forward mean-field SDE under the Gaussian closure.

    b(x) - (1-eps)/2 * (div Sigma - Sigma C^-1 (x - m)) - g_bar_kf(x).
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    grad_log_group = p.div_sigma(x) - p.sigma_sq(x) @ bar.solve(x - bar.mean)
    out = (np.asarray(p.drift(x), dtype=float)
           - 0.5 * (1.0 - eps_noise) * grad_log_group
           - g_bar_kf(p, x, Cxh, mh))
    if not np.all(np.isfinite(out)):
        raise NumericalBlowupError("non-finite forward drift")
    return out


def terminal_update(p: ControlProblem, e: Ensemble, delta: float, rng
                    ) -> Ensemble:
    """Stochastic EnKF update turning the forward ensemble at T into the
    terminal reverse ensemble:

        X~ = X - C^{x xi} (C^{xi xi} + V)^-1 (xi(X) + V^{1/2} Noise).

    The inversion is regularised by V itself; ``delta`` is the
    inflation used elsewhere and is not added here.
    """
    x = e.particles
    m_xi, C_xixi = map_moments(e, p.terminal_map)
    xi_vals = np.column_stack(
        [np.asarray(p.terminal_map(x[:, i]), dtype=float).reshape(-1)
         for i in range(e.size)])
    dx = x - x.mean(axis=1)[:, None]
    dxi = xi_vals - m_xi[:, None]
    C_xxi = (dx @ dxi.T) / (e.size - 1)
    K = np.linalg.solve((C_xixi + p.terminal_weight).T, C_xxi.T).T
    noise = rng.standard_normal((p.dim_xi, e.size))
    updated = x - K @ (xi_vals + p.v_sqrt @ noise)
    if not np.all(np.isfinite(updated)):
        raise NumericalBlowupError("non-finite terminal EnKF update")
    return Ensemble(particles=updated, time=e.time)


def gain_from_moments(bar: EmpiricalMoments, tilde: EmpiricalMoments
                      ) -> GainPair:
    """A = Cbar^-1 - Ctilde^-1 (symmetrized), c = Ctilde^-1 m~ - Cbar^-1 m."""
    d = bar.cov.shape[0]
    bar_inv = bar.inv()
    tilde_inv = tilde.inv()
    A = bar_inv - tilde_inv
    A = 0.5 * (A + A.T)
    c = tilde_inv @ tilde.mean - bar_inv @ bar.mean
    return GainPair(A=A, c=c)


def g_tilde_kf(p: ControlProblem, x, tilde: EmpiricalMoments, gain: GainPair):
    """Reverse-sweep cost-of-control drift term

        (1/2) Ctilde A (Sigma(m~) - G(m~) R G(m~)^T) (A x + A m~ + 2 c),

    with Sigma and G frozen at the reverse mean m~.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    m = tilde.mean
    g = np.asarray(p.gain(m), dtype=float)
    core = p.sigma_sq(m) - g @ p.control_weight @ g.T
    return 0.5 * tilde.cov @ gain.A @ core @ (gain.A @ (x + m) + 2.0 * gain.c)


def reverse_drift(p: ControlProblem, x, bar: EmpiricalMoments,
                  tilde: EmpiricalMoments, gain: GainPair, eps_noise: float):
    """Drift of the reverse mean-field SDE under the Gaussian closure.

    -b(x) + (div Sigma - Sigma Cbar^-1 (x - m))
          - (1-eps)/2 * (div Sigma - Sigma Ctilde^-1 (x - m~))
          - g_tilde_kf(x).
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    sig = p.sigma_sq(x)
    div = p.div_sigma(x)
    bar_group = div - sig @ bar.solve(x - bar.mean)
    tilde_group = div - sig @ tilde.solve(x - tilde.mean)
    out = (-np.asarray(p.drift(x), dtype=float)
           + bar_group
           - 0.5 * (1.0 - eps_noise) * tilde_group
           - g_tilde_kf(p, x, tilde, gain))
    if not np.all(np.isfinite(out)):
        raise NumericalBlowupError("non-finite reverse drift")
    return out
