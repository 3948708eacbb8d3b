"""Forward/reverse sweeps, schedule assembly, simulation and cost.

The solver integrates an interacting-particle approximation of the
forward mean-field SDE from t = 0 to T, applies the stochastic EnKF
update at the final time, then integrates the reverse mean-field SDE
back to t = 0.  Per-step gain pairs (A_t, c_t) extracted from the
forward and reverse moments form the affine control schedule.

Two reverse backends are available: ``enkf`` (all interaction terms
through Gaussian moment closures) and ``dmap_enkf`` (grad-log density
terms through a diffusion-map projection onto the stored forward
ensembles, keeping reverse particles inside their convex hull).
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import dmap, enkf
from .errors import DimensionError, NumericalBlowupError
from .problem import (AffineControlSchedule, ControlProblem, apply_control,
                      control_cost, running_cost, terminal_cost)
from .stats import Ensemble, EmpiricalMoments, cross_cov, map_moments, moments

BACKENDS = ("enkf", "dmap_enkf")


@dataclass
class NoiseSchedule:
    """Step-indexed noise level: ``first`` for the initial ``n_first``
    steps, ``rest`` afterwards.  All values must lie in [0, 1]."""

    first: float = 0.0
    n_first: int = 0
    rest: float = 0.0

    def __post_init__(self):
        for v in (self.first, self.rest):
            if not 0.0 <= v <= 1.0:
                raise DimensionError("noise levels must lie in [0, 1]")
        if self.n_first < 0:
            raise DimensionError("n_first must be nonnegative")

    def at(self, n: int) -> float:
        return self.first if n < self.n_first else self.rest

    @classmethod
    def constant(cls, value: float):
        return cls(first=value, n_first=0, rest=value)


@dataclass
class SolverConfig:
    dt: float = 1e-2
    ensemble_size: int = 64
    eps_noise_forward: NoiseSchedule = field(
        default_factory=lambda: NoiseSchedule(first=1.0, n_first=1, rest=0.0))
    eps_noise_reverse: NoiseSchedule = field(default_factory=NoiseSchedule)
    inflation: float = 1e-6
    backend: str = "enkf"
    eps_dm: Optional[float] = None   # kernel scale; defaults to dt
    seed: int = 0
    record_every: int = 1
    init_cov: Optional[np.ndarray] = None  # optional initial particle spread
    sinkhorn_tol: float = dmap.DEFAULT_SINKHORN_TOL
    sinkhorn_max_iter: int = dmap.DEFAULT_SINKHORN_MAX_ITER

    def __post_init__(self):
        if self.dt <= 0:
            raise DimensionError("dt must be positive")
        if self.ensemble_size < 2:
            raise DimensionError("ensemble_size must be at least 2")
        if self.inflation < 0:
            raise DimensionError("inflation must be nonnegative")
        if self.backend not in BACKENDS:
            raise DimensionError(f"backend must be one of {BACKENDS}")
        if self.record_every < 1:
            raise DimensionError("record_every must be a positive integer")

    def n_steps(self, horizon: float) -> int:
        n = int(round(horizon / self.dt))
        if n < 1 or abs(horizon / self.dt - n) > 0.5:
            raise DimensionError(
                f"horizon {horizon} is not an integer multiple of dt {self.dt}")
        return n

    def kernel_scale(self) -> float:
        return self.dt if self.eps_dm is None else self.eps_dm


@dataclass
class SweepRecord:
    """Per-grid-point moments, gains, and solver diagnostics."""

    times: np.ndarray
    bar_means: np.ndarray = None
    bar_covs: np.ndarray = None
    tilde_means: np.ndarray = None
    tilde_covs: np.ndarray = None
    gains: np.ndarray = None
    shifts: np.ndarray = None
    forward_ensembles: Optional[List[np.ndarray]] = None
    sinkhorn_residuals: List[float] = field(default_factory=list)
    hull_min_weight: List[float] = field(default_factory=list)
    hull_sum_deviation: List[float] = field(default_factory=list)

    def thinned(self, stride: int):
        """Copy with per-grid-point arrays thinned to every ``stride``-th
        entry (the final entry always kept)."""
        idx = np.arange(len(self.times))
        keep = (idx % stride == 0) | (idx == len(self.times) - 1)
        out = SweepRecord(times=self.times[keep])
        for name in ("bar_means", "bar_covs", "tilde_means", "tilde_covs",
                     "gains", "shifts"):
            arr = getattr(self, name)
            if arr is not None:
                setattr(out, name, arr[keep])
        out.sinkhorn_residuals = list(self.sinkhorn_residuals)
        out.hull_min_weight = list(self.hull_min_weight)
        out.hull_sum_deviation = list(self.hull_sum_deviation)
        return out


def _init_particles(p: ControlProblem, cfg: SolverConfig, rng):
    x = np.tile(p.start[:, None], (1, cfg.ensemble_size))
    if cfg.init_cov is not None:
        chol = np.linalg.cholesky(np.atleast_2d(np.asarray(cfg.init_cov,
                                                           dtype=float)))
        x = x + chol @ rng.standard_normal((p.dim_x, cfg.ensemble_size))
    return x


def _check_finite(x, step, time):
    if not np.all(np.isfinite(x)):
        bad = int(np.argwhere(~np.isfinite(x).all(axis=0))[0, 0])
        raise NumericalBlowupError(
            f"ensemble blew up at step {step} (t={time:.6g}), particle {bad}",
            step=step, time=time, particle=bad)


def forward_sweep(p: ControlProblem, cfg: SolverConfig, rng):
    """Integrate the forward mean-field SDE from x0 over [0, T].

    Returns ``(record, ensemble_at_T)``.  With the ``dmap_enkf``
    backend the record retains the raw forward ensembles needed by the
    split-step reverse sweep; otherwise only moments are stored.
    """
    n = cfg.n_steps(p.horizon)
    dt = cfg.dt
    d, m = p.dim_x, cfg.ensemble_size
    times = np.arange(n + 1) * dt
    record = SweepRecord(times=times,
                         bar_means=np.zeros((n + 1, d)),
                         bar_covs=np.zeros((n + 1, d, d)))
    store_ensembles = cfg.backend == "dmap_enkf"
    if store_ensembles:
        record.forward_ensembles = []

    x = _init_particles(p, cfg, rng)
    for step in range(n + 1):
        e = Ensemble(particles=x, time=times[step])
        bar = moments(e, cfg.inflation)
        record.bar_means[step] = bar.mean
        record.bar_covs[step] = bar.cov
        if store_ensembles:
            record.forward_ensembles.append(x.copy())
        if step == n:
            break

        eps = cfg.eps_noise_forward.at(step)
        cxh = cross_cov(e, p.running_map)
        mh, _ = map_moments(e, p.running_map)
        drift = np.zeros_like(x)
        if cfg.backend == "dmap_enkf" and eps < 1.0:
            op = dmap.build_operator(x, p.sigma_sq, cfg.kernel_scale(),
                                     tol=cfg.sinkhorn_tol,
                                     max_iter=cfg.sinkhorn_max_iter)
            record.sinkhorn_residuals.append(
                max(op.row_residual, op.col_residual))
            for i in range(m):
                xi = x[:, i]
                grad_log = dmap.grad_log_estimate(op, xi)
                drift[:, i] = (np.asarray(p.drift(xi), dtype=float)
                               - 0.5 * (1.0 - eps) * grad_log
                               - enkf.g_bar_kf(p, xi, cxh, mh))
        else:
            for i in range(m):
                drift[:, i] = enkf.forward_drift(p, x[:, i], bar, cxh, mh, eps)

        x_new = x + dt * drift
        if eps > 0.0:
            noise = rng.standard_normal((p.dim_b, m))
            for i in range(m):
                x_new[:, i] += np.sqrt(eps * dt) * (
                    np.asarray(p.noise(x[:, i]), dtype=float) @ noise[:, i])
        x = x_new
        _check_finite(x, step, times[step])
    return record, Ensemble(particles=x, time=p.horizon)


def reverse_sweep_enkf(p: ControlProblem, cfg: SolverConfig,
                       record: SweepRecord, terminal: Ensemble, rng
                       ) -> SweepRecord:
    """Integrate the reverse mean-field SDE from T down to 0 using the
    frozen per-step forward moments, emitting a gain pair per step."""
    n = len(record.times) - 1
    dt = cfg.dt
    d, m = p.dim_x, cfg.ensemble_size
    record.tilde_means = np.zeros((n + 1, d))
    record.tilde_covs = np.zeros((n + 1, d, d))
    record.gains = np.zeros((n + 1, d, d))
    record.shifts = np.zeros((n + 1, d))

    x = terminal.particles.copy()
    for back, step in enumerate(range(n, -1, -1)):
        tilde = moments(Ensemble(particles=x, time=record.times[step]),
                        cfg.inflation)
        bar = _frozen_bar(record, step)
        gain = enkf.gain_from_moments(bar, tilde)
        record.tilde_means[step] = tilde.mean
        record.tilde_covs[step] = tilde.cov
        record.gains[step] = gain.A
        record.shifts[step] = gain.c
        if step == 0:
            break

        eps = cfg.eps_noise_reverse.at(back)
        drift = np.zeros_like(x)
        for i in range(m):
            try:
                drift[:, i] = enkf.reverse_drift(p, x[:, i], bar, tilde,
                                                 gain, eps)
            except NumericalBlowupError as exc:
                exc.step = step
                exc.time = record.times[step]
                exc.particle = i
                raise
        x_new = x + dt * drift
        if eps > 0.0:
            noise = rng.standard_normal((p.dim_b, m))
            for i in range(m):
                x_new[:, i] += np.sqrt(eps * dt) * (
                    np.asarray(p.noise(x[:, i]), dtype=float) @ noise[:, i])
        x = x_new
        _check_finite(x, step - 1, record.times[step - 1])
    return record


def reverse_sweep_splitstep(p: ControlProblem, cfg: SolverConfig,
                            record: SweepRecord, terminal: Ensemble, rng
                            ) -> SweepRecord:
    """Split-step reverse sweep: a drift/noise half step followed by a
    diffusion-map projection onto the forward ensemble of the target
    grid point, which keeps every reverse particle inside the convex
    hull of the forward anchors."""
    if record.forward_ensembles is None:
        raise DimensionError("split-step sweep needs stored forward ensembles")
    n = len(record.times) - 1
    dt = cfg.dt
    d, m = p.dim_x, cfg.ensemble_size
    record.tilde_means = np.zeros((n + 1, d))
    record.tilde_covs = np.zeros((n + 1, d, d))
    record.gains = np.zeros((n + 1, d, d))
    record.shifts = np.zeros((n + 1, d))

    x = terminal.particles.copy()
    for back, step in enumerate(range(n, -1, -1)):
        tilde = moments(Ensemble(particles=x, time=record.times[step]),
                        cfg.inflation)
        bar = _frozen_bar(record, step)
        gain = enkf.gain_from_moments(bar, tilde)
        record.tilde_means[step] = tilde.mean
        record.tilde_covs[step] = tilde.cov
        record.gains[step] = gain.A
        record.shifts[step] = gain.c
        if step == 0:
            break

        eps = cfg.eps_noise_reverse.at(back)
        half = np.zeros_like(x)
        for i in range(m):
            xi = x[:, i]
            sig = p.sigma_sq(xi)
            tilde_group = p.div_sigma(xi) - sig @ tilde.solve(xi - tilde.mean)
            drift = (-np.asarray(p.drift(xi), dtype=float)
                     - enkf.g_tilde_kf(p, xi, tilde, gain)
                     - 0.5 * (1.0 - eps) * tilde_group)
            half[:, i] = xi + dt * drift
        if eps > 0.0:
            noise = rng.standard_normal((p.dim_b, m))
            for i in range(m):
                half[:, i] += np.sqrt(eps * dt) * (
                    np.asarray(p.noise(x[:, i]), dtype=float) @ noise[:, i])
        _check_finite(half, step, record.times[step])

        anchors = record.forward_ensembles[step - 1]
        op = dmap.build_operator(anchors, p.sigma_sq, cfg.kernel_scale(),
                                 tol=cfg.sinkhorn_tol,
                                 max_iter=cfg.sinkhorn_max_iter)
        record.sinkhorn_residuals.append(max(op.row_residual, op.col_residual))
        projected = np.zeros_like(x)
        for i in range(m):
            w = dmap.membership_weights(op, half[:, i])
            record.hull_min_weight.append(float(w.min()))
            record.hull_sum_deviation.append(abs(float(w.sum()) - 1.0))
            projected[:, i] = op.anchors @ w
        x = projected
        _check_finite(x, step - 1, record.times[step - 1])
    return record


def _frozen_bar(record: SweepRecord, step: int):
    return EmpiricalMoments(mean=record.bar_means[step],
                            cov=record.bar_covs[step])


def solve(p: ControlProblem, cfg: SolverConfig):
    """Run the full pipeline and return (schedule, record).

    Identical configurations and seeds produce identical results; the
    forward sweep, terminal update and reverse sweep each consume an
    independent child stream of the seed.
    """
    streams = np.random.SeedSequence(cfg.seed).spawn(3)
    fwd_rng, term_rng, rev_rng = (np.random.default_rng(s) for s in streams)

    record, e_T = forward_sweep(p, cfg, fwd_rng)
    terminal = enkf.terminal_update(p, e_T, cfg.inflation, term_rng)
    if cfg.backend == "dmap_enkf":
        record = reverse_sweep_splitstep(p, cfg, record, terminal, rev_rng)
    else:
        record = reverse_sweep_enkf(p, cfg, record, terminal, rev_rng)

    sched = AffineControlSchedule(times=record.times.copy(),
                                  gains=record.gains.copy(),
                                  shifts=record.shifts.copy())
    if cfg.record_every > 1:
        record = record.thinned(cfg.record_every)
    return sched, record


def simulate_controlled(p: ControlProblem, sched: AffineControlSchedule,
                        rho: float = 1.0, n_paths: int = 1, rng=None,
                        x0=None):
    """Euler-Maruyama simulation of the controlled dynamics under the
    schedule's feedback law.

    ``rho`` scales the diffusion (0 gives a deterministic run).
    Returns ``(times, states, controls)`` with shapes (N+1,),
    (n_paths, N+1, d_x) and (n_paths, N+1, d_u).  Paths use independent
    spawned RNG streams, so results do not depend on evaluation order.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    times = sched.times
    n = len(times) - 1
    states = np.zeros((n_paths, n + 1, p.dim_x))
    controls = np.zeros((n_paths, n + 1, p.dim_u))
    start = p.start if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
    path_rngs = [np.random.default_rng(s)
                 for s in rng.bit_generator.seed_seq.spawn(n_paths)]

    for k in range(n_paths):
        prng = path_rngs[k]
        x = start.copy()
        for step in range(n + 1):
            u = apply_control(p, sched, times[step], x)
            states[k, step] = x
            controls[k, step] = u
            if step == n:
                break
            dt = times[step + 1] - times[step]
            x_new = x + dt * (np.asarray(p.drift(x), dtype=float)
                              + np.asarray(p.gain(x), dtype=float) @ u)
            if rho != 0.0:
                xi = prng.standard_normal(p.dim_b)
                x_new = x_new + rho * np.sqrt(dt) * (
                    np.asarray(p.noise(x), dtype=float) @ xi)
            x = x_new
            if not np.all(np.isfinite(x)):
                raise NumericalBlowupError(
                    f"controlled path {k} blew up at step {step}",
                    step=step, time=times[step], particle=k)
    return times, states, controls


def estimate_cost(p: ControlProblem, sched: AffineControlSchedule,
                  n_paths: int = 100, rng=None, rho: float = 1.0):
    """Monte-Carlo estimate of the expected cost under the schedule.

    Left-endpoint rectangle rule on the schedule grid, consistent with
    the Euler-Maruyama stepping.  Returns ``(mean, standard_error)``.
    """
    if n_paths < 1:
        raise DimensionError("n_paths must be at least 1")
    times, states, controls = simulate_controlled(
        p, sched, rho=rho, n_paths=n_paths, rng=rng)
    dts = np.diff(times)
    costs = np.zeros(n_paths)
    for k in range(n_paths):
        acc = 0.0
        for step in range(len(dts)):
            acc += dts[step] * (running_cost(p, states[k, step])
                                + control_cost(p, controls[k, step]))
        acc += terminal_cost(p, states[k, -1])
        costs[k] = acc
    mean = float(costs.mean())
    stderr = float(costs.std(ddof=1) / np.sqrt(n_paths)) if n_paths > 1 else 0.0
    return mean, stderr
