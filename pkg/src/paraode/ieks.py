"""Probabilistic ODE solvers built on (iterated) extended Kalman smoothing.

:func:`para_ieks` is the parallel-in-time solver: starting from a constant
trajectory it alternates a global linearization of the ODE constraint with
an exact time-parallel RTS solve of the linearized model, i.e. Gauss-Newton
on the MAP problem. :func:`seq_ieks` runs the identical loop with the
sequential smoother, and :func:`eks_solve` is the classic single-pass
extended Kalman smoother with local linearization.

All inference happens with unit diffusion in preconditioned coordinates;
the diffusion is calibrated afterwards from the last filter pass.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import tria, whitened_sq_norm
from .parallel import para_rts
from .prior import IWPPrior, preconditioned_model, taylor_init
from .scan import ScanStats, default_pool
from .sequential import innovations, kf_predict, kf_update, rts_smooth_pass, seq_rts
from .statespace import (
    AffineObservation,
    GaussianSqrt,
    LINEARIZATIONS,
    StateTrajectory,
    linearize_trajectory,
    projection,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IEKSConfig:
    max_iterations: int = 100
    traj_rtol: float = 1e-13
    obj_atol: float = 1e-9
    obj_rtol: float = 1e-6
    linearization: str = "EK1"
    calibrate: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if min(self.traj_rtol, self.obj_atol, self.obj_rtol) <= 0:
            raise ValueError("tolerances must be positive")
        if self.linearization not in LINEARIZATIONS:
            raise ValueError(f"unknown linearization {self.linearization!r}")


@dataclass
class SolverReport:
    """Result of a solve.

    ``marginals`` are full-state Gaussians at every grid point (including
    ``t_0``), with covariances scaled by the calibrated diffusion;
    ``solution_marginals`` are their ``E_0`` projections.
    """

    grid: np.ndarray
    marginals: GaussianSqrt
    solution_marginals: GaussianSqrt
    sigma_hat: float
    iterations: int
    objective_trace: list
    scan_stats: tuple = field(default_factory=lambda: (ScanStats(), ScanStats()))
    converged: bool = True
    method: str = "paraieks"

    @property
    def mean(self):
        return self.solution_marginals.mean

    @property
    def std(self):
        return np.sqrt(np.einsum("...ij,...ij->...i", self.solution_marginals.cov_sqrt, self.solution_marginals.cov_sqrt))


def objective_value(traj, transitions):
    """Negative log prior density ``1/2 sum_n ||eta_n - Phi eta_{n-1}||^2_{Q^-1}``.

    ``traj`` is a ``StateTrajectory`` or an array of ``N + 1`` states.
    """
    states = traj.states if isinstance(traj, StateTrajectory) else np.asarray(traj)
    incr = states[1:] - (transitions.Phi @ states[:-1, :, None])[..., 0]
    return 0.5 * float(np.sum(whitened_sq_norm(incr, transitions.Q_sqrt)))


def stopping_check(prev_traj, new_traj, prev_obj, new_obj, cfg):
    """True once either the trajectory or the objective has stopped changing."""
    prev_traj, new_traj = np.asarray(prev_traj), np.asarray(new_traj)
    step = np.max(np.abs(new_traj - prev_traj))
    if step <= cfg.traj_rtol * np.max(np.abs(new_traj)):
        return True
    return abs(new_obj - prev_obj) <= cfg.obj_atol + cfg.obj_rtol * abs(new_obj)


def calibrate_sigma(z, S_sqrt):
    """Quasi-MLE diffusion from whitened innovations.

    ``sigma^2 = 1/(N d) sum_n z_n^T S_n^-1 z_n``.

    Args:
        z: innovations, shape ``(N, d)``.
        S_sqrt: innovation covariance factors, shape ``(N, d, d)``.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z, S_sqrt = z[None], np.asarray(S_sqrt)[None]
    if z.size == 0:
        return 1.0
    return float(np.sqrt(np.sum(whitened_sq_norm(z, S_sqrt)) / z.size))


def _check_grid(ivp, grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.shape[0] < 2:
        raise ValueError("grid needs at least two points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    if grid[0] != ivp.t_span[0] or not np.isclose(grid[-1], ivp.t_span[1], rtol=1e-12, atol=0):
        raise ValueError("grid must start at t_0 and end at T")
    return grid


def _setup(ivp, prior, grid, cfg):
    unit = IWPPrior(prior.nu, prior.d, 1.0)
    model = preconditioned_model(unit, grid)
    init = taylor_init(ivp, prior.nu)
    return model, init, model.gaussian_from_state(init)


def _observe(ivp, eta, grid, model, method, pool):
    """Linearize at the (original-coordinate) states and map ``H`` to model coordinates."""
    obs = linearize_trajectory(ivp, eta, grid, method, pool)
    return AffineObservation(obs.H * model.scale, obs.d_vec, obs.R_sqrt)


def _report(ivp, prior, grid, model, filtered, smoothed, obs, cfg, **kw):
    if cfg.calibrate:
        z, S_sqrt = innovations(filtered, model.transitions, obs)
        sigma = calibrate_sigma(z, S_sqrt)
    else:
        sigma = prior.sigma
    marg = model.gaussian_to_state(GaussianSqrt(smoothed.mean, sigma * smoothed.cov_sqrt))
    E0 = projection(prior.nu, prior.d, 0)
    sol = GaussianSqrt(marg.mean @ E0.T, tria(E0 @ marg.cov_sqrt))
    return SolverReport(grid=grid, marginals=marg, solution_marginals=sol, sigma_hat=sigma, **kw)


def _iterate(ivp, prior, grid, cfg, smoother, pool, method_name):
    grid = _check_grid(ivp, grid)
    cfg = cfg or IEKSConfig()
    model, init, x0 = _setup(ivp, prior, grid, cfg)
    N = grid.shape[0] - 1
    eta = np.tile(init.mean, (N + 1, 1))
    prev_obj = objective_value(model.from_state(eta), model.transitions)
    trace = []
    converged = False
    stats = (ScanStats(), ScanStats())
    for it in range(1, cfg.max_iterations + 1):
        try:
            obs = _observe(ivp, eta[1:], grid[1:], model, cfg.linearization, pool)
        except Exception as err:
            if hasattr(err, "iteration"):
                err.iteration = it
            raise
        if smoother == "parallel":
            filtered, smoothed, stats = para_rts(x0, model.transitions, obs, pool)
        else:
            filtered, smoothed = seq_rts(x0, model.transitions, obs)
        new_eta = model.to_state(smoothed.mean)
        obj = objective_value(smoothed.mean, model.transitions)
        trace.append(obj)
        done = stopping_check(eta, new_eta, prev_obj, obj, cfg)
        logger.debug("%s iteration %d: objective %.6e", method_name, it, obj)
        eta, prev_obj = new_eta, obj
        if done:
            converged = True
            break
    if not converged:
        logger.warning("%s did not converge in %d iterations", method_name, cfg.max_iterations)
    return _report(
        ivp, prior, grid, model, filtered, smoothed, obs, cfg,
        iterations=it, objective_trace=trace, scan_stats=stats, converged=converged, method=method_name,
    )


def para_ieks(ivp, prior, grid, cfg: Optional[IEKSConfig] = None, pool=None):
    """Parallel-in-time IEKS solve of ``ivp`` on ``grid``.

    Args:
        ivp: the :class:`~paraode.statespace.IVProblem`.
        prior: :class:`~paraode.prior.IWPPrior`; its ``sigma`` is only used
            when calibration is disabled.
        grid: strictly increasing times from ``0`` to ``T``.
        cfg: iteration and stopping settings.
        pool: work pool; defaults to the process-wide pool.

    Returns:
        SolverReport. Non-convergence is reported via ``converged=False``.
    """
    return _iterate(ivp, prior, grid, cfg, "parallel", pool or default_pool(), "paraieks")


def seq_ieks(ivp, prior, grid, cfg: Optional[IEKSConfig] = None, pool=None):
    """Same iteration as :func:`para_ieks` with the sequential RTS smoother."""
    return _iterate(ivp, prior, grid, cfg, "sequential", pool or default_pool(), "ieks")


def eks_solve(ivp, prior, grid, cfg: Optional[IEKSConfig] = None, pool=None):
    """Extended Kalman smoother linearizing at each predicted mean (no iterations)."""
    grid = _check_grid(ivp, grid)
    cfg = cfg or IEKSConfig()
    model, init, x0 = _setup(ivp, prior, grid, cfg)
    lin = LINEARIZATIONS[cfg.linearization]
    tr = model.transitions
    N = grid.shape[0] - 1
    states, obs_list = [x0], []
    state = x0
    for n in range(N):
        trans = type(tr)(*(a[n] for a in tr))
        pred = kf_predict(state, trans)
        o = lin(ivp, model.to_state(pred.mean), grid[n + 1])
        o = AffineObservation(o.H * model.scale, o.d_vec, o.R_sqrt)
        state = kf_update(pred, o)
        states.append(state)
        obs_list.append(o)
    filtered = GaussianSqrt(np.stack([s.mean for s in states]), np.stack([s.cov_sqrt for s in states]))
    obs = AffineObservation(*(np.stack(p) for p in zip(*obs_list)))
    smoothed = rts_smooth_pass(filtered, tr)
    obj = objective_value(smoothed.mean, tr)
    return _report(
        ivp, prior, grid, model, filtered, smoothed, obs, cfg,
        iterations=1, objective_trace=[obj], converged=True, method="eks",
    )
