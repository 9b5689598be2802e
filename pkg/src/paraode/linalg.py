"""Square-root covariance arithmetic.

Covariances are never formed explicitly inside the solver. A covariance ``M``
is carried as a left square-root ``L`` with ``L @ L.T == M``; the factors
produced here are lower-triangular, but the sign of their diagonal is left
to whatever the QR decomposition returns. Compare factors only through
``L @ L.T``.

All functions broadcast over leading (batch) axes.
"""

import numpy as np

from .errors import InvalidInputError, SingularFactorError


def tria(M):
    """Lower-triangular square-root of ``M @ M.T``.

    Computes the QR decomposition ``M.T = Q R`` and returns ``R.T``.

    Args:
        M: array of shape ``(..., n, m)``. If ``m < n`` the input is padded
            with zero columns first.

    Returns:
        Array of shape ``(..., n, n)``, lower-triangular with exact zeros
        above the diagonal.
    """
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise InvalidInputError("tria: input contains NaN or Inf")
    n, m = M.shape[-2:]
    if m < n:
        pad = np.zeros(M.shape[:-1] + (n - m,))
        M = np.concatenate([M, pad], axis=-1)
    if n == 0:
        return np.zeros(M.shape[:-1] + (0,))
    R = np.linalg.qr(np.swapaxes(M, -1, -2), mode="r")
    return np.tril(np.swapaxes(R, -1, -2))


def sqrt_sum(A_sqrt, B_sqrt):
    """Square-root of ``A + B`` given square-roots of ``A`` and ``B``."""
    A_sqrt = np.asarray(A_sqrt, dtype=float)
    B_sqrt = np.asarray(B_sqrt, dtype=float)
    if A_sqrt.shape[-2] != B_sqrt.shape[-2]:
        raise ValueError(
            f"sqrt_sum: dimension mismatch {A_sqrt.shape} vs {B_sqrt.shape}"
        )
    batch = np.broadcast_shapes(A_sqrt.shape[:-2], B_sqrt.shape[:-2])
    A_sqrt = np.broadcast_to(A_sqrt, batch + A_sqrt.shape[-2:])
    B_sqrt = np.broadcast_to(B_sqrt, batch + B_sqrt.shape[-2:])
    return tria(np.concatenate([A_sqrt, B_sqrt], axis=-1))


def check_triangular_factor(L, what="factor"):
    """Raise SingularFactorError if the triangular ``L`` is numerically singular.

    A diagonal entry counts as zero when it is below ``n * eps`` times the
    largest diagonal magnitude of the same matrix.
    """
    n = L.shape[-1]
    if n == 0:
        return
    diag = np.abs(np.diagonal(L, axis1=-2, axis2=-1))
    scale = diag.max(axis=-1, keepdims=True)
    bad = (diag <= n * np.finfo(float).eps * scale) | (scale == 0.0) | ~np.isfinite(diag)
    if np.any(bad):
        raise SingularFactorError(f"singular {what}: zero diagonal entry in triangular factor")


def tril_solve(L, B):
    """Solve ``L X = B`` for lower-triangular ``L`` (broadcasting over batches)."""
    if L.shape[-1] == 0:
        return np.zeros(L.shape[:-1] + B.shape[-1:])
    return np.linalg.solve(L, B)


def right_solve(B, L):
    """Return ``B @ inv(L)`` for a square ``L``."""
    if L.shape[-1] == 0:
        return np.zeros(B.shape[:-1] + (0,))
    return np.swapaxes(np.linalg.solve(np.swapaxes(L, -1, -2), np.swapaxes(B, -1, -2)), -1, -2)


def whitened_sq_norm(v, Q_sqrt):
    """Squared Mahalanobis norm ``v^T (Q_sqrt Q_sqrt^T)^{-1} v``.

    Computed as ``||w||^2`` with ``Q_sqrt w = v``.

    Raises:
        SingularFactorError: if ``Q_sqrt`` has a zero diagonal entry.
    """
    v = np.asarray(v, dtype=float)
    Q_sqrt = np.asarray(Q_sqrt, dtype=float)
    check_triangular_factor(Q_sqrt, "whitening factor")
    w = tril_solve(Q_sqrt, v[..., None])[..., 0]
    return np.sum(w * w, axis=-1)
