"""Integrated Wiener process prior.

The ``nu``-times integrated Wiener process has closed-form transitions
``Y(t+h) | Y(t) ~ N(Phi(h) Y(t), sigma^2 Q(h))`` with

    Phi_ij(h) = h^(j-i) / (j-i)!                               for j >= i
    Q_ij(h)   = h^(2nu+1-i-j) / ((2nu+1-i-j) (nu-i)! (nu-j)!)

per ODE dimension. The diagonal coordinate change
``T(h) = diag(sqrt(h) h^(nu-i) / (nu-i)!)`` makes both step-size free:
``T^-1 Phi T`` is the Pascal matrix ``binom(nu-i, j-i)`` and
``T^-1 Q T^-T`` is ``1 / (2nu+1-i-j)``. Square-roots of ``Q(h)`` are built
from the Cholesky factor of the latter, which stays well conditioned for
tiny ``h``.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidInputError
from .statespace import GaussianSqrt, projection
from .taylor import taylor_derivatives

__all__ = [
    "IWPPrior",
    "TransitionModel",
    "PreconditionedModel",
    "iwp_transition",
    "preconditioner",
    "preconditioned_model",
    "taylor_init",
    "projection",
]


@dataclass(frozen=True)
class IWPPrior:
    nu: int
    d: int
    sigma: float = 1.0

    def __post_init__(self):
        if int(self.nu) != self.nu or self.nu < 1:
            raise ValueError(f"nu must be an integer >= 1, got {self.nu}")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be an integer >= 1, got {self.d}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def D(self):
        return self.d * (self.nu + 1)


class TransitionModel(NamedTuple):
    """``Y_{n+1} | Y_n ~ N(Phi Y_n, Q_sqrt Q_sqrt^T)``; may be stacked over steps."""

    Phi: np.ndarray
    Q_sqrt: np.ndarray
    h: np.ndarray


def _check_step(h):
    h = np.asarray(h, dtype=float)
    if not np.all(np.isfinite(h)) or np.any(h <= 0):
        raise InvalidInputError(f"step size must be positive and finite, got {h}")
    return h


def _pascal(nu):
    return np.array(
        [[math.comb(nu - i, j - i) if j >= i else 0 for j in range(nu + 1)] for i in range(nu + 1)],
        dtype=float,
    )


def _unit_process_noise(nu):
    i = np.arange(nu + 1)
    return 1.0 / (2 * nu + 1 - i[:, None] - i[None, :])


def _psd_sqrt(M):
    """Lower-triangular square-root of a symmetric PSD matrix.

    Falls back to an eigenvalue-clipped factor when Cholesky fails.
    """
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        from .linalg import tria

        w, V = np.linalg.eigh(M)
        return tria(V * np.sqrt(np.clip(w, 0.0, None)))


def _scale_vector(nu, h):
    """Diagonal of the per-dimension preconditioner, broadcast over ``h``."""
    h = np.asarray(h, dtype=float)[..., None]
    k = nu - np.arange(nu + 1)
    fact = np.array([math.factorial(j) for j in k], dtype=float)
    return np.sqrt(h) * h**k / fact


def iwp_transition(prior, h):
    """Discrete transition ``(Phi(h), sqrt(sigma^2 Q(h)))`` for a single step."""
    h = float(_check_step(h))
    nu, d = prior.nu, prior.d
    i = np.arange(nu + 1)
    k = i[None, :] - i[:, None]
    fact = np.array([math.factorial(abs(j)) for j in k.ravel()], dtype=float).reshape(k.shape)
    Phi1 = np.where(k >= 0, h ** np.clip(k, 0, None) / fact, 0.0)
    t = _scale_vector(nu, h)
    Q1_sqrt = t[:, None] * _psd_sqrt(_unit_process_noise(nu))
    eye = np.eye(d)
    return TransitionModel(np.kron(eye, Phi1), prior.sigma * np.kron(eye, Q1_sqrt), np.asarray(h))


def preconditioner(prior, h):
    """Diagonal coordinate change ``T(h)`` and its inverse, as dense matrices."""
    h = float(_check_step(h))
    t = np.tile(_scale_vector(prior.nu, h), prior.d)
    return np.diag(t), np.diag(1.0 / t)


class PreconditionedModel(NamedTuple):
    """Prior transitions on a grid, expressed in coordinates ``x = Y / scale``.

    ``transitions`` is stacked over the ``N`` steps. For a uniform grid the
    transitions are the step-free Pascal / Hilbert-type pair.
    """

    transitions: TransitionModel
    scale: np.ndarray

    def to_state(self, x):
        return x * self.scale

    def from_state(self, y):
        return y / self.scale

    def gaussian_to_state(self, g):
        return GaussianSqrt(g.mean * self.scale, g.cov_sqrt * self.scale[:, None])

    def gaussian_from_state(self, g):
        return GaussianSqrt(g.mean / self.scale, g.cov_sqrt / self.scale[:, None])


def preconditioned_model(prior, grid):
    """Transitions for every step of ``grid`` in preconditioned coordinates.

    A single coordinate change ``T(h_ref)`` with ``h_ref`` the mean step is
    used for the whole grid; step ``n`` then has
    ``Phi = R_n Pascal R_n^-1`` and ``Q_sqrt = sigma R_n chol(Hilbert)`` with
    ``R_n = T(h_n) / T(h_ref)`` evaluated as ``(h_n / h_ref)^(nu - i + 1/2)``.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.shape[0] < 2:
        raise InvalidInputError("grid needs at least two points")
    h = _check_step(np.diff(grid))
    nu, d = prior.nu, prior.d
    h_ref = (grid[-1] - grid[0]) / h.shape[0]
    expo = nu - np.arange(nu + 1) + 0.5
    ratio = (h / h_ref)[:, None] ** expo  # (N, nu+1)
    P = _pascal(nu)
    Lq = _psd_sqrt(_unit_process_noise(nu))
    Phi1 = ratio[:, :, None] * P / ratio[:, None, :]
    Q1 = ratio[:, :, None] * Lq
    eye = np.eye(d)
    Phi = np.stack([np.kron(eye, m) for m in Phi1])
    Q_sqrt = prior.sigma * np.stack([np.kron(eye, m) for m in Q1])
    scale = np.tile(_scale_vector(nu, h_ref), d)
    return PreconditionedModel(TransitionModel(Phi, Q_sqrt, h), scale)


def taylor_init(ivp, nu):
    """Exact initial state: ``y0`` and its first ``nu`` time derivatives, zero covariance."""
    derivs = taylor_derivatives(ivp.f, ivp.y0, nu, t0=ivp.t_span[0])
    if not np.all(np.isfinite(derivs)):
        raise InvalidInputError("vector field produced non-finite Taylor coefficients at y0")
    mean = derivs.T.reshape(-1)
    D = mean.shape[0]
    return GaussianSqrt(mean, np.zeros((D, D)))
