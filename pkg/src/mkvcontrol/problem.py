"""Control problem data, quadratic costs, and affine feedback laws.

A :class:`ControlProblem` bundles the model functions of the controlled
diffusion

    dX_t = b(X_t) dt + G(X_t) u_t dt + sigma(X_t) dB_t

together with the quadratic running cost (1/2) h(x)^T S^-1 h(x), the
terminal cost (1/2) xi(x)^T V^-1 xi(x), the control penalty weight R,
the horizon T and the start point x0.  Feedback laws are affine,
u_t(x) = R G(x)^T (A_t x + c_t), and are stored on a time grid by
:class:`AffineControlSchedule`.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DimensionError, TimeOutOfRangeError

Vector = np.ndarray
Matrix = np.ndarray


def _spd_factor(name, w):
    w = np.atleast_2d(np.asarray(w, dtype=float))
    if w.shape[0] != w.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {w.shape}")
    if not np.allclose(w, w.T, atol=1e-12 * (1.0 + np.abs(w).max())):
        raise DimensionError(f"{name} must be symmetric")
    try:
        factor = cho_factor(w, lower=True)
    except np.linalg.LinAlgError as exc:
        raise DimensionError(f"{name} must be positive definite") from exc
    return w, factor


@dataclass
class ControlProblem:
    """Immutable description of a finite-horizon control problem.

    All map-valued fields take a single state x of shape (dim_x,) and
    return numpy arrays of the declared shapes.  ``div_sigma`` is the
    analytic divergence of Sigma = sigma sigma^T (row-wise divergence,
    a vector field); leave it ``None`` for constant sigma, in which
    case the zero map is used.
    """

    dim_x: int
    dim_u: int
    dim_b: int
    dim_h: int
    dim_xi: int
    drift: Callable[[Vector], Vector]
    gain: Callable[[Vector], Matrix]
    noise: Callable[[Vector], Matrix]
    running_map: Callable[[Vector], Vector]
    running_weight: Matrix
    terminal_map: Callable[[Vector], Vector]
    terminal_weight: Matrix
    control_weight: Matrix
    horizon: float
    start: Vector
    div_sigma: Optional[Callable[[Vector], Vector]] = None

    def __post_init__(self):
        for name in ("dim_x", "dim_u", "dim_b", "dim_h", "dim_xi"):
            if getattr(self, name) < 1:
                raise DimensionError(f"{name} must be a positive integer")
        if self.horizon <= 0:
            raise DimensionError("horizon must be positive")
        self.start = np.asarray(self.start, dtype=float).reshape(-1)
        if self.start.shape != (self.dim_x,):
            raise DimensionError(
                f"start has shape {self.start.shape}, expected ({self.dim_x},)")

        self.running_weight, self._s_factor = _spd_factor(
            "running_weight S", self.running_weight)
        self.terminal_weight, self._v_factor = _spd_factor(
            "terminal_weight V", self.terminal_weight)
        self.control_weight, self._r_factor = _spd_factor(
            "control_weight R", self.control_weight)
        if self.running_weight.shape != (self.dim_h, self.dim_h):
            raise DimensionError("running_weight shape does not match dim_h")
        if self.terminal_weight.shape != (self.dim_xi, self.dim_xi):
            raise DimensionError("terminal_weight shape does not match dim_xi")
        if self.control_weight.shape != (self.dim_u, self.dim_u):
            raise DimensionError("control_weight shape does not match dim_u")

        if self.div_sigma is None:
            zero = np.zeros(self.dim_x)
            self.div_sigma = lambda x, _z=zero: _z

        # symmetric square root of V, used by the stochastic EnKF update
        vals, vecs = np.linalg.eigh(self.terminal_weight)
        self._v_sqrt = (vecs * np.sqrt(vals)) @ vecs.T

        # probe the model maps once at the start point
        x = self.start
        probes = {
            "drift": (self.drift(x), (self.dim_x,)),
            "gain": (self.gain(x), (self.dim_x, self.dim_u)),
            "noise": (self.noise(x), (self.dim_x, self.dim_b)),
            "div_sigma": (self.div_sigma(x), (self.dim_x,)),
            "running_map": (self.running_map(x), (self.dim_h,)),
            "terminal_map": (self.terminal_map(x), (self.dim_xi,)),
        }
        for name, (value, shape) in probes.items():
            if np.shape(np.asarray(value)) != shape:
                raise DimensionError(
                    f"{name}(x0) has shape {np.shape(value)}, expected {shape}")

    def sigma_sq(self, x):
        """Sigma(x) = sigma(x) sigma(x)^T."""
        s = np.asarray(self.noise(x), dtype=float)
        return s @ s.T

    def solve_s(self, y):
        """S^-1 y via the cached Cholesky factor."""
        return cho_solve(self._s_factor, np.asarray(y, dtype=float))

    def solve_v(self, y):
        return cho_solve(self._v_factor, np.asarray(y, dtype=float))

    def solve_r(self, y):
        return cho_solve(self._r_factor, np.asarray(y, dtype=float))

    @property
    def v_sqrt(self):
        """Symmetric square root of the terminal weight V."""
        return self._v_sqrt

    def check_state(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape != (self.dim_x,):
            raise DimensionError(
                f"state has shape {x.shape}, expected ({self.dim_x},)")
        return x


@dataclass
class AffineControlSchedule:
    """Per-grid-point feedback gains (A_t, c_t) on a strictly increasing
    time grid covering [0, T].

    Lookup is piecewise constant and left closed: t in [t_n, t_{n+1})
    uses entry n, and t = t_N uses the last entry.
    """

    times: np.ndarray
    gains: np.ndarray   # (N+1, d, d), each symmetric
    shifts: np.ndarray  # (N+1, d)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float).reshape(-1)
        self.gains = np.asarray(self.gains, dtype=float)
        self.shifts = np.asarray(self.shifts, dtype=float)
        n = len(self.times)
        if np.any(np.diff(self.times) <= 0):
            raise DimensionError("schedule times must be strictly increasing")
        if self.gains.shape[0] != n or self.shifts.shape[0] != n:
            raise DimensionError("times, gains and shifts must have equal length")
        sym_err = np.abs(self.gains - np.transpose(self.gains, (0, 2, 1))).max()
        scale = 1.0 + np.abs(self.gains).max()
        if sym_err > 1e-8 * scale:
            raise DimensionError("schedule gains must be symmetric")

    @property
    def t_end(self):
        return self.times[-1]

    def index_at(self, t):
        t0, t1 = self.times[0], self.times[-1]
        slack = 1e-9 * max(1.0, abs(t1))
        if t < t0 - slack or t > t1 + slack:
            raise TimeOutOfRangeError(
                f"t={t} outside schedule window [{t0}, {t1}]")
        idx = int(np.searchsorted(self.times, t, side="right")) - 1
        return min(max(idx, 0), len(self.times) - 1)

    def at(self, t):
        """(A_t, c_t) selected by the left-closed lookup rule."""
        idx = self.index_at(t)
        return self.gains[idx], self.shifts[idx]


def running_cost(p: ControlProblem, x) -> float:
    """Running cost c(x) = (1/2) h(x)^T S^-1 h(x); always >= 0."""
    x = p.check_state(x)
    h = np.asarray(p.running_map(x), dtype=float).reshape(-1)
    if h.shape != (p.dim_h,):
        raise DimensionError(f"h(x) has shape {h.shape}, expected ({p.dim_h},)")
    return 0.5 * float(h @ p.solve_s(h))


def terminal_cost(p: ControlProblem, x) -> float:
    """Terminal cost f(x) = (1/2) xi(x)^T V^-1 xi(x); always >= 0."""
    x = p.check_state(x)
    xi = np.asarray(p.terminal_map(x), dtype=float).reshape(-1)
    if xi.shape != (p.dim_xi,):
        raise DimensionError(f"xi(x) has shape {xi.shape}, expected ({p.dim_xi},)")
    return 0.5 * float(xi @ p.solve_v(xi))


def control_cost(p: ControlProblem, u) -> float:
    """Control penalty (1/2) u^T R^-1 u."""
    u = np.asarray(u, dtype=float).reshape(-1)
    return 0.5 * float(u @ p.solve_r(u))


def apply_control(p: ControlProblem, sched: AffineControlSchedule, t, x):
    """Evaluate u_t(x) = R G(x)^T (A_t x + c_t)."""
    x = p.check_state(x)
    A, c = sched.at(t)
    return p.control_weight @ (np.asarray(p.gain(x)).T @ (A @ x + c))
