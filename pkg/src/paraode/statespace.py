"""State-space representation of the ODE inference problem.

States follow a block-per-dimension layout: for an ODE of dimension ``d`` and
a prior of smoothness ``nu`` the state has ``D = d * (nu + 1)`` entries,
``[y_1, y_1', ..., y_1^(nu), y_2, ...]``. The projection ``E_i`` picks the
``i``-th derivative of every dimension.

Containers are ``NamedTuple``s of arrays. Every array may carry leading batch
axes, so a sequence of ``N`` Gaussians is one ``GaussianSqrt`` with
``mean.shape == (N, D)`` and ``cov_sqrt.shape == (N, D, D)``.
"""

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import LinearizationError


class GaussianSqrt(NamedTuple):
    """Gaussian with mean and left square-root of the covariance."""

    mean: np.ndarray
    cov_sqrt: np.ndarray

    @property
    def cov(self):
        return self.cov_sqrt @ np.swapaxes(self.cov_sqrt, -1, -2)

    def at(self, n):
        """The ``n``-th Gaussian of a stacked sequence."""
        return GaussianSqrt(self.mean[n], self.cov_sqrt[n])


def stack_gaussians(items):
    return GaussianSqrt(
        np.stack([g.mean for g in items]), np.stack([g.cov_sqrt for g in items])
    )


class AffineObservation(NamedTuple):
    """Noiseless affine measurement ``H Y = d_vec``.

    ``R_sqrt`` is kept for generality of the update formulas; the ODE
    solver always uses zeros.
    """

    H: np.ndarray
    d_vec: np.ndarray
    R_sqrt: np.ndarray

    @classmethod
    def noiseless(cls, H, d_vec):
        H = np.asarray(H, dtype=float)
        d_vec = np.asarray(d_vec, dtype=float)
        k = H.shape[-2]
        return cls(H, d_vec, np.zeros(H.shape[:-2] + (k, k)))


@dataclass(frozen=True, eq=False)
class IVProblem:
    """Initial value problem ``y' = f(y, t)``, ``y(0) = y0`` on ``t_span``.

    ``jacobian`` may be omitted, in which case central finite differences
    are used.
    """

    f: Callable
    y0: np.ndarray
    t_span: tuple
    jacobian: Optional[Callable] = None

    def __post_init__(self):
        object.__setattr__(self, "y0", np.atleast_1d(np.asarray(self.y0, dtype=float)))
        t0, T = self.t_span
        if t0 != 0.0 or not T > 0.0:
            raise ValueError(f"t_span must be (0, T) with T > 0, got {self.t_span}")

    @property
    def d(self):
        return self.y0.shape[0]

    def jac(self, y, t):
        if self.jacobian is not None:
            return np.atleast_2d(np.asarray(self.jacobian(y, t), dtype=float))
        return finite_difference_jacobian(self.f, y, t)


class StateTrajectory(NamedTuple):
    """Grid ``t_0 < ... < t_N`` together with one state per grid point."""

    times: np.ndarray
    states: np.ndarray


def finite_difference_jacobian(f, y, t):
    """Central-difference Jacobian with step ``1e-6 * max(1, |y_j|)``."""
    y = np.asarray(y, dtype=float)
    d = y.shape[0]
    J = np.empty((d, d))
    for j in range(d):
        step = 1e-6 * max(1.0, abs(y[j]))
        e = np.zeros(d)
        e[j] = step
        J[:, j] = (np.asarray(f(y + e, t)) - np.asarray(f(y - e, t))) / (2 * step)
    return J


def projection(nu, d, i):
    """The ``d x d(nu+1)`` matrix ``E_i = I_d kron e_i``."""
    if not 0 <= i <= nu:
        raise ValueError(f"projection index {i} outside 0..{nu}")
    e = np.zeros((1, nu + 1))
    e[0, i] = 1.0
    return np.kron(np.eye(d), e)


def _order_from_state(eta, d):
    D = eta.shape[-1]
    if D % d or D // d < 2:
        raise ValueError(f"state dimension {D} incompatible with ODE dimension {d}")
    return D // d - 1


def _evaluate(ivp, y, t):
    try:
        fy = np.atleast_1d(np.asarray(ivp.f(y, t), dtype=float))
        Fy = ivp.jac(y, t)
    except (ArithmeticError, ValueError) as err:
        raise LinearizationError(f"vector field evaluation failed at t={t}: {err}", t=t) from err
    if not (np.all(np.isfinite(fy)) and np.all(np.isfinite(Fy))):
        raise LinearizationError(f"non-finite vector field or Jacobian at t={t}", t=t)
    return fy, Fy


def linearize_ek1(ivp, eta, t):
    """First-order Taylor linearization of ``E_1 Y - f(E_0 Y, t)`` at ``eta``.

    Returns the observation with ``H = E_1 - F_y E_0`` and
    ``d_vec = f(E_0 eta) - F_y E_0 eta``.
    """
    eta = np.asarray(eta, dtype=float)
    d = ivp.d
    nu = _order_from_state(eta, d)
    E0, E1 = projection(nu, d, 0), projection(nu, d, 1)
    y = E0 @ eta
    fy, Fy = _evaluate(ivp, y, t)
    return AffineObservation.noiseless(E1 - Fy @ E0, fy - Fy @ y)


def linearize_ek0(ivp, eta, t):
    """Zeroth-order linearization (Jacobian replaced by zero)."""
    eta = np.asarray(eta, dtype=float)
    d = ivp.d
    nu = _order_from_state(eta, d)
    y = projection(nu, d, 0) @ eta
    try:
        fy = np.atleast_1d(np.asarray(ivp.f(y, t), dtype=float))
    except (ArithmeticError, ValueError) as err:
        raise LinearizationError(f"vector field evaluation failed at t={t}: {err}", t=t) from err
    if not np.all(np.isfinite(fy)):
        raise LinearizationError(f"non-finite vector field at t={t}", t=t)
    return AffineObservation.noiseless(projection(nu, d, 1), fy)


LINEARIZATIONS = {"EK1": linearize_ek1, "EK0": linearize_ek0}


def linearize_trajectory(ivp, etas, times, method="EK1", pool=None):
    """Linearize at every ``(eta_n, t_n)``; returns a stacked observation.

    The per-point linearizations are independent and are mapped over
    ``pool`` when given.
    """
    lin = LINEARIZATIONS[method]

    def one(n):
        try:
            return lin(ivp, etas[n], times[n])
        except LinearizationError as err:
            err.index = n
            raise

    idx = range(len(times))
    obs = pool.map(one, idx) if pool is not None else [one(n) for n in idx]
    return AffineObservation(*(np.stack(parts) for parts in zip(*obs)))
