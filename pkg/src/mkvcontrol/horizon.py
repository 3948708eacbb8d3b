"""Infinite-horizon discounted control via stationary sweeps.

For a discounted cost with factor gamma > 0 the reverse-sweep drift
correction acquires an extra gamma-proportional term that pulls the
reverse covariance back toward the forward one.  The stationary
control law is extracted from the equilibrated forward and reverse
moments.
"""

from dataclasses import dataclass, field

import numpy as np

from . import enkf
from .errors import ConvergenceError, DimensionError, NumericalBlowupError
from .problem import ControlProblem
from .solver import SolverConfig, _check_finite
from .stats import Ensemble, EmpiricalMoments, cross_cov, map_moments, moments


@dataclass
class HorizonConfig:
    gamma: float
    base: SolverConfig
    equilibrium_tol: float = 1e-6
    max_time: float = 100.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise DimensionError("gamma must be positive")
        if self.equilibrium_tol <= 0:
            raise DimensionError("equilibrium_tol must be positive")
        if self.max_time <= 0:
            raise DimensionError("max_time must be positive")


def g_tilde_kf_discounted(p: ControlProblem, x, tilde: EmpiricalMoments,
                          gain: enkf.GainPair, gamma: float):
    """Discounted reverse drift correction

        (1/2) Ctilde {gamma I + A (Sigma(m~) - G(m~) R G(m~)^T)}
              (A x + A m~ + 2 c).

    Reduces to the finite-horizon term at gamma = 0.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    m = tilde.mean
    g = np.asarray(p.gain(m), dtype=float)
    core = gamma * np.eye(p.dim_x) + gain.A @ (
        p.sigma_sq(m) - g @ p.control_weight @ g.T)
    return 0.5 * tilde.cov @ core @ (gain.A @ (x + m) + 2.0 * gain.c)


def _moment_residual(prev: EmpiricalMoments, cur: EmpiricalMoments) -> float:
    return (np.abs(cur.mean - prev.mean).max()
            + np.abs(cur.cov - prev.cov).max())


def stationary_solve(p: ControlProblem, hcfg: HorizonConfig):
    """Equilibrate the forward sweep, then the discounted reverse sweep
    with frozen forward moments, and return the stationary gain.

    Returns ``(gain, diagnostics)`` where diagnostics carries the
    forward/reverse step counts, final residuals, the equilibrium
    moments, and the recorded reverse-covariance history.
    """
    cfg = hcfg.base
    dt = cfg.dt
    max_steps = int(np.ceil(hcfg.max_time / dt))
    streams = np.random.SeedSequence(cfg.seed).spawn(2)
    fwd_rng, rev_rng = (np.random.default_rng(s) for s in streams)

    # forward equilibration
    x = np.tile(p.start[:, None], (1, cfg.ensemble_size))
    if cfg.init_cov is not None:
        chol = np.linalg.cholesky(np.atleast_2d(np.asarray(cfg.init_cov,
                                                           dtype=float)))
        x = x + chol @ fwd_rng.standard_normal((p.dim_x, cfg.ensemble_size))
    bar_prev = None
    fwd_steps = 0
    fwd_residual = np.inf
    for step in range(max_steps):
        e = Ensemble(particles=x, time=step * dt)
        bar = moments(e, cfg.inflation)
        if bar_prev is not None:
            fwd_residual = _moment_residual(bar_prev, bar)
            # skip the stochastic warm-up steps when testing equilibrium
            if step > cfg.eps_noise_forward.n_first and \
                    fwd_residual < hcfg.equilibrium_tol * dt:
                fwd_steps = step
                break
        bar_prev = bar
        eps = cfg.eps_noise_forward.at(step)
        cxh = cross_cov(e, p.running_map)
        mh, _ = map_moments(e, p.running_map)
        x_new = x.copy()
        for i in range(cfg.ensemble_size):
            x_new[:, i] = x[:, i] + dt * enkf.forward_drift(
                p, x[:, i], bar, cxh, mh, eps)
        if eps > 0.0:
            noise = fwd_rng.standard_normal((p.dim_b, cfg.ensemble_size))
            for i in range(cfg.ensemble_size):
                x_new[:, i] += np.sqrt(eps * dt) * (
                    np.asarray(p.noise(x[:, i]), dtype=float) @ noise[:, i])
        x = x_new
        _check_finite(x, step, step * dt)
    else:
        raise ConvergenceError(
            f"forward sweep did not equilibrate within max_time "
            f"{hcfg.max_time} (residual {fwd_residual:.3e})",
            residual=fwd_residual)
    bar_eq = moments(Ensemble(particles=x, time=fwd_steps * dt),
                     cfg.inflation)

    # reverse equilibration from the forward equilibrium ensemble
    # (the reverse density starts equal to the forward one)
    y = x.copy()
    tilde_prev = None
    rev_residual = np.inf
    rev_steps = 0
    tilde_cov_history = []
    for step in range(max_steps):
        tilde = moments(Ensemble(particles=y, time=0.0), cfg.inflation)
        tilde_cov_history.append(tilde.cov.copy())
        if tilde_prev is not None:
            rev_residual = _moment_residual(tilde_prev, tilde)
            if rev_residual < hcfg.equilibrium_tol * dt:
                rev_steps = step
                break
        tilde_prev = tilde
        gain = enkf.gain_from_moments(bar_eq, tilde)
        eps = cfg.eps_noise_reverse.at(step)
        y_new = y.copy()
        for i in range(cfg.ensemble_size):
            yi = y[:, i]
            sig = p.sigma_sq(yi)
            div = p.div_sigma(yi)
            bar_group = div - sig @ bar_eq.solve(yi - bar_eq.mean)
            tilde_group = div - sig @ tilde.solve(yi - tilde.mean)
            drift = (-np.asarray(p.drift(yi), dtype=float)
                     + bar_group
                     - 0.5 * (1.0 - eps) * tilde_group
                     - g_tilde_kf_discounted(p, yi, tilde, gain, hcfg.gamma))
            if not np.all(np.isfinite(drift)):
                raise NumericalBlowupError(
                    f"non-finite reverse drift at step {step}",
                    step=step, particle=i)
            y_new[:, i] = yi + dt * drift
        if eps > 0.0:
            noise = rev_rng.standard_normal((p.dim_b, cfg.ensemble_size))
            for i in range(cfg.ensemble_size):
                y_new[:, i] += np.sqrt(eps * dt) * (
                    np.asarray(p.noise(y[:, i]), dtype=float) @ noise[:, i])
        y = y_new
        _check_finite(y, step, step * dt)
    else:
        raise ConvergenceError(
            f"reverse sweep did not equilibrate within max_time "
            f"{hcfg.max_time} (residual {rev_residual:.3e})",
            residual=rev_residual)
    tilde_eq = moments(Ensemble(particles=y, time=0.0), cfg.inflation)

    gain = enkf.gain_from_moments(bar_eq, tilde_eq)
    diagnostics = {
        "forward_steps": fwd_steps,
        "reverse_steps": rev_steps,
        "forward_residual": fwd_residual,
        "reverse_residual": rev_residual,
        "bar_eq": bar_eq,
        "tilde_eq": tilde_eq,
        "tilde_cov_history": np.array(tilde_cov_history),
    }
    return gain, diagnostics
