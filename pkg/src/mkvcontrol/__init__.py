"""Particle-based stochastic optimal control via forward/reverse
mean-field sweeps with EnKF and diffusion-map closures."""

from .dmap import (DiffusionMapOperator, build_kernel, build_operator,
                   grad_log_estimate, membership_weights, semigroup_apply,
                   sinkhorn)
from .enkf import (GainPair, forward_drift, g_bar_kf, g_tilde_kf,
                   gain_from_moments, reverse_drift, terminal_update)
from .errors import (ConvergenceError, DimensionError,
                     FullRankViolationError, InsufficientEnsembleError,
                     MkvError, NumericalBlowupError, TimeOutOfRangeError)
from .horizon import HorizonConfig, g_tilde_kf_discounted, stationary_solve
from .problem import (AffineControlSchedule, ControlProblem, apply_control,
                      control_cost, running_cost, terminal_cost)
from .scenarios import REGISTRY, Scenario, get_scenario
from .solver import (NoiseSchedule, SolverConfig, SweepRecord, estimate_cost,
                     forward_sweep, reverse_sweep_enkf,
                     reverse_sweep_splitstep, simulate_controlled, solve)
from .stats import Ensemble, EmpiricalMoments, cross_cov, moments

__version__ = "0.1.0"
