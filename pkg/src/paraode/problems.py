"""Test problems, reference solutions and error metrics."""

import functools
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import ReferenceNotConvergedError
from .statespace import IVProblem


@dataclass(frozen=True, eq=False)
class NamedProblem:
    """An IVP with a reference solution ``reference(t) -> (..., d)``.

    ``grid_size`` is the default number of steps used in the experiments.
    """

    name: str
    ivp: IVProblem
    reference: Callable
    grid_size: int

    def grid(self, n=None):
        n = self.grid_size if n is None else n
        return np.linspace(self.ivp.t_span[0], self.ivp.t_span[1], n + 1)


class DenseReference:
    """Fixed-step RK4 reference, integrated lazily on first use.

    The step count is doubled once as a self check: the endpoint must move
    by less than ``rtol`` (relative to its max-norm). Values between nodes
    use cubic Hermite interpolation with the vector field as slopes.
    """

    def __init__(self, ivp, h_ref=None, rtol=1e-10):
        self.ivp = ivp
        self.rtol = rtol
        T = ivp.t_span[1]
        self.steps = int(np.ceil(T / h_ref)) if h_ref else 2**13
        self._spline = None

    def _integrate(self, steps):
        f, T = self.ivp.f, self.ivp.t_span[1]
        ts = np.linspace(0.0, T, steps + 1)
        ys = np.empty((steps + 1, self.ivp.d))
        dys = np.empty_like(ys)
        y = self.ivp.y0.copy()
        ys[0] = y
        for n in range(steps):
            t, h = ts[n], ts[n + 1] - ts[n]
            k1 = np.asarray(f(y, t), dtype=float)
            dys[n] = k1
            k2 = np.asarray(f(y + 0.5 * h * k1, t + 0.5 * h), dtype=float)
            k3 = np.asarray(f(y + 0.5 * h * k2, t + 0.5 * h), dtype=float)
            k4 = np.asarray(f(y + h * k3, t + h), dtype=float)
            y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            ys[n + 1] = y
        dys[-1] = f(y, ts[-1])
        return ts, ys, dys

    def build(self):
        if self._spline is None:
            _, coarse, _ = self._integrate(self.steps)
            ts, ys, dys = self._integrate(2 * self.steps)
            change = np.max(np.abs(coarse[-1] - ys[-1]))
            scale = max(np.max(np.abs(ys[-1])), np.finfo(float).tiny)
            if change >= self.rtol * scale:
                raise ReferenceNotConvergedError(
                    f"RK4 reference endpoint changed by {change:.3e} when halving the step"
                )
            self.endpoint_change = change
            self._spline = CubicHermiteSpline(ts, ys, dys, axis=0)
        return self

    def __call__(self, t):
        return self.build()._spline(t)


def rk4_reference(ivp, h_ref=None):
    """Self-checked RK4 reference solution for ``ivp`` (see :class:`DenseReference`)."""
    return DenseReference(ivp, h_ref)


def _logistic_f(y, t):
    return y * (1 - y)


def _logistic_jac(y, t):
    return np.array([[1.0 - 2.0 * y[0]]])


@functools.lru_cache(maxsize=None)
def logistic():
    """``y' = y (1 - y)`` on ``[0, 10]`` with ``y(0) = 0.01``; closed-form reference."""
    y0 = 0.01

    def reference(t):
        t = np.asarray(t, dtype=float)
        e = np.exp(t)
        return (y0 * e / (1 + y0 * (e - 1)))[..., None]

    ivp = IVProblem(_logistic_f, np.array([y0]), (0.0, 10.0), _logistic_jac)
    return NamedProblem("logistic", ivp, reference, 30)


def _rigid_body_f(y, t):
    return np.array([-2.0 * y[1] * y[2], 1.25 * y[0] * y[2], -0.5 * y[0] * y[1]])


def _rigid_body_jac(y, t):
    return np.array(
        [
            [0.0, -2.0 * y[2], -2.0 * y[1]],
            [1.25 * y[2], 0.0, 1.25 * y[0]],
            [-0.5 * y[1], -0.5 * y[0], 0.0],
        ]
    )


@functools.lru_cache(maxsize=None)
def rigid_body():
    """Euler's rigid body equations on ``[0, 20]``, ``y(0) = [1, 0, 0.9]``."""
    ivp = IVProblem(_rigid_body_f, np.array([1.0, 0.0, 0.9]), (0.0, 20.0), _rigid_body_jac)
    return NamedProblem("rigidbody", ivp, rk4_reference(ivp, 20.0 / 2**14), 150)


@functools.lru_cache(maxsize=None)
def van_der_pol(mu=1.0):
    """Van der Pol oscillator on ``[0, 6.3]``, ``y(0) = [2, 0]``."""

    def f(y, t):
        return np.array([y[1], mu * ((1 - y[0] * y[0]) * y[1] - y[0])])

    def jac(y, t):
        return np.array([[0.0, 1.0], [-2.0 * mu * y[0] * y[1] - mu, mu * (1 - y[0] ** 2)]])

    ivp = IVProblem(f, np.array([2.0, 0.0]), (0.0, 6.3), jac)
    return NamedProblem("vanderpol", ivp, rk4_reference(ivp, 6.3 / 2**13), 100)


PROBLEMS = {"logistic": logistic, "rigidbody": rigid_body, "vanderpol": van_der_pol}


def get_problem(name):
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None


def rmse(means, reference, grid):
    """Root-mean-square error over all grid points and dimensions.

    ``reference`` is either a callable ``t -> (..., d)`` or an array of
    reference values on ``grid``.
    """
    means = np.asarray(means, dtype=float)
    ref = reference(np.asarray(grid)) if callable(reference) else np.asarray(reference, dtype=float)
    ref = ref.reshape(means.shape)
    return float(np.sqrt(np.mean((means - ref) ** 2)))
