"""Truncated Taylor arithmetic for exact initial derivatives.

A :class:`Jet` holds the Taylor coefficients ``c_0, ..., c_K`` of a scalar
function ``x(t) = sum_k c_k t^k`` around ``t = 0``. Arithmetic on jets
propagates the coefficients exactly, so evaluating a vector field written in
plain arithmetic on jets yields the Taylor coefficients of ``f(y(t), t)``.
"""

import math

import numpy as np


class Jet:
    """Scalar truncated Taylor series."""

    # defer to our reflected operators when numpy scalars are on the left
    __array_ufunc__ = None

    def __init__(self, coeffs):
        self.coeffs = np.asarray(coeffs, dtype=float)

    @property
    def order(self):
        return self.coeffs.shape[0] - 1

    def _lift(self, other):
        if isinstance(other, Jet):
            return other
        c = np.zeros_like(self.coeffs)
        c[0] = other
        return Jet(c)

    def __add__(self, other):
        return Jet(self.coeffs + self._lift(other).coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        return Jet(self.coeffs - self._lift(other).coeffs)

    def __rsub__(self, other):
        return Jet(self._lift(other).coeffs - self.coeffs)

    def __neg__(self):
        return Jet(-self.coeffs)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.coeffs * other)
        a, b = self.coeffs, other.coeffs
        K = a.shape[0]
        # Cauchy product truncated at order K-1
        return Jet(np.array([np.dot(a[: k + 1], b[k::-1]) for k in range(K)]))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.coeffs / other)
        a, b = self.coeffs, other.coeffs
        if b[0] == 0.0:
            raise ZeroDivisionError("Jet division by a series with zero constant term")
        q = np.zeros_like(a)
        for k in range(a.shape[0]):
            q[k] = (a[k] - np.dot(q[:k], b[k:0:-1])) / b[0]
        return Jet(q)

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __pow__(self, n):
        if not (isinstance(n, (int, np.integer)) and n >= 0):
            return NotImplemented
        out = self._lift(1.0)
        for _ in range(n):
            out = out * self
        return out

    def __repr__(self):
        return f"Jet({self.coeffs.tolist()})"


def taylor_coefficients(f, y0, order, t0=0.0):
    """Taylor coefficients of the IVP solution ``y' = f(y, t), y(t0) = y0``.

    Uses the recursion ``c_{k+1} = [f(y(t), t)]_k / (k + 1)``.

    Args:
        f: vector field ``f(y, t)`` written with arithmetic operations only
            (``+``, ``-``, ``*``, ``/``, integer powers), applied to an object
            array of jets.
        y0: initial value, shape ``(d,)``.
        order: highest coefficient index ``K``.

    Returns:
        Array of shape ``(K + 1, d)`` with ``c_0 = y0``.
    """
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    d = y0.shape[0]
    coeffs = np.zeros((order + 1, d))
    coeffs[0] = y0
    for k in range(order):
        width = k + 1
        y_jet = np.empty(d, dtype=object)
        for i in range(d):
            y_jet[i] = Jet(coeffs[:width, i])
        t_coeffs = np.zeros(width)
        t_coeffs[0] = t0
        if width > 1:
            t_coeffs[1] = 1.0
        fy = f(y_jet, Jet(t_coeffs))
        fy = np.asarray(fy, dtype=object).reshape(d)
        for i in range(d):
            fi = fy[i]
            ck = fi.coeffs[k] if isinstance(fi, Jet) else (float(fi) if k == 0 else 0.0)
            coeffs[k + 1, i] = ck / (k + 1)
    return coeffs


def taylor_derivatives(f, y0, order, t0=0.0):
    """Exact derivatives ``y(t0), y'(t0), ..., y^(order)(t0)``; shape ``(order + 1, d)``."""
    c = taylor_coefficients(f, y0, order, t0)
    fact = np.array([math.factorial(k) for k in range(order + 1)], dtype=float)
    return c * fact[:, None]
