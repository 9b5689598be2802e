"""Time-parallel square-root Kalman filter and RTS smoother.

Filtering element ``n`` parameterizes ``p(Y_n | Z_n, Y_{n-1}) =
N(A Y_{n-1} + b, C)`` and ``p(Z_n | Y_{n-1}) ~ N_I(Y_{n-1}; eta, J)``;
smoothing element ``n`` parameterizes ``p(Y_n | Z_{1:n}, Y_{n+1}) =
N(E Y_{n+1} + g, L)``. Both come with associative operators, so the
filtering marginals are prefix combinations and the smoothing marginals
suffix combinations, computed by :func:`paraode.scan.associative_scan`.

All element functions broadcast over leading batch axes. Covariances and
information matrices are carried as square-roots ``C_sqrt``, ``J_sqrt``,
``L_sqrt``; ``J_sqrt`` is a general (non-triangular) ``D x D`` matrix.
"""

from typing import NamedTuple

import numpy as np

from .errors import SingularFactorError
from .linalg import check_triangular_factor, right_solve, tril_solve, tria
from .scan import ScanStats, associative_scan
from .sequential import _update_blocks, kf_predict, kf_update, smoothing_gain
from .statespace import GaussianSqrt


class FilteringElement(NamedTuple):
    A: np.ndarray
    b: np.ndarray
    C_sqrt: np.ndarray
    eta: np.ndarray
    J_sqrt: np.ndarray


class SmoothingElement(NamedTuple):
    E: np.ndarray
    g: np.ndarray
    L_sqrt: np.ndarray


def _mT(x):
    return np.swapaxes(x, -1, -2)


def _mv(M, v):
    return (M @ v[..., None])[..., 0]


def filtering_identity(D):
    return FilteringElement(np.eye(D), np.zeros(D), np.zeros((D, D)), np.zeros(D), np.zeros((D, D)))


def smoothing_identity(D):
    return SmoothingElement(np.eye(D), np.zeros(D), np.zeros((D, D)))


def make_filtering_element(trans, obs, init=None):
    """Filtering element for one step (or a batch of steps).

    With ``init`` given, the element is the first one: it carries the
    posterior ``p(Y_1 | Z_1)`` obtained by predicting and updating ``init``,
    with ``A = 0`` and an empty likelihood (``eta = 0``, ``J = 0``).
    Otherwise the previous state is treated as a point mass, so the
    prediction is ``N(0, Q)`` and the element follows the square-root
    construction with ``K = Psi21 Psi11^-1`` and ``sqrt(S) = Psi11``.
    """
    D = trans.Phi.shape[-1]
    if init is not None:
        post = kf_update(kf_predict(init, trans), obs)
        batch = post.mean.shape[:-1]
        zeros = np.zeros(batch + (D, D))
        return FilteringElement(zeros, post.mean, post.cov_sqrt, np.zeros(batch + (D,)), zeros.copy())

    H, d = obs.H, obs.d_vec
    k = H.shape[-2]
    if k > D:
        raise ValueError("more observed components than state dimensions")
    try:
        S_sqrt, K, C_sqrt = _update_blocks(trans.Q_sqrt, obs)
    except SingularFactorError as err:
        raise SingularFactorError(f"degenerate observation in filtering element: {err}") from err
    Phi = trans.Phi
    batch = C_sqrt.shape[:-2]
    A = (np.eye(D) - K @ H) @ Phi
    b = _mv(K, np.broadcast_to(d, batch + (k,)))
    J_thin = right_solve(_mT(Phi) @ _mT(H), _mT(S_sqrt))
    eta = _mv(J_thin, tril_solve(S_sqrt, d[..., None])[..., 0]) if k else np.zeros(batch + (D,))
    J_sqrt = np.concatenate([J_thin, np.zeros(batch + (D, D - k))], axis=-1)
    return FilteringElement(A, b, C_sqrt, eta, J_sqrt)


def combine_filtering(ai, aj):
    """Associative filtering operator ``ai (x) aj`` (``ai`` earlier in time)."""
    D = ai.A.shape[-1]
    if aj.A.shape[-1] != D:
        raise ValueError("filtering elements of different dimension")
    batch = np.broadcast_shapes(ai.A.shape[:-2], aj.A.shape[:-2])
    Ci, Jj = ai.C_sqrt, aj.J_sqrt
    eye = np.broadcast_to(np.eye(D), batch + (D, D))
    zero = np.zeros(batch + (D, D))
    top = np.concatenate([np.broadcast_to(_mT(Ci) @ Jj, batch + (D, D)), eye], axis=-1)
    bottom = np.concatenate([np.broadcast_to(Jj, batch + (D, D)), zero], axis=-1)
    Xi = tria(np.concatenate([top, bottom], axis=-2))
    Xi11, Xi21, Xi22 = Xi[..., :D, :D], Xi[..., D:, :D], Xi[..., D:, D:]
    try:
        check_triangular_factor(Xi11, "Xi11")
    except SingularFactorError as err:
        raise SingularFactorError(f"singular block in filtering combination: {err}") from err

    W = right_solve(Ci, _mT(Xi11))  # sqrt(C_i) Xi11^-T
    M = eye - W @ _mT(Xi21)  # (I + C_i J_j)^-1
    Aj_M = aj.A @ M
    A = Aj_M @ ai.A
    b = _mv(Aj_M, ai.b + _mv(Ci @ _mT(Ci), aj.eta)) + aj.b
    C_sqrt = tria(np.concatenate([aj.A @ W, np.broadcast_to(aj.C_sqrt, batch + (D, D))], axis=-1))
    eta = _mv(_mT(ai.A) @ _mT(M), aj.eta - _mv(Jj @ _mT(Jj), ai.b)) + ai.eta
    J_sqrt = tria(np.concatenate([_mT(ai.A) @ Xi22, np.broadcast_to(ai.J_sqrt, batch + (D, D))], axis=-1))
    return FilteringElement(A, b, C_sqrt, eta, J_sqrt)


def make_smoothing_element(filtered, trans):
    """Smoothing element ``(E, g, L)`` from a filtering marginal and the next transition."""
    E, L_sqrt = smoothing_gain(filtered, trans)
    g = filtered.mean - _mv(E @ trans.Phi, filtered.mean)
    return SmoothingElement(E, g, L_sqrt)


def terminal_smoothing_element(filtered):
    """Last element: ``E = 0`` and the final filtering marginal."""
    D = filtered.mean.shape[-1]
    return SmoothingElement(np.zeros(filtered.mean.shape[:-1] + (D, D)), filtered.mean, filtered.cov_sqrt)


def combine_smoothing(bi, bj):
    """Associative smoothing operator ``bi (x) bj`` (``bi`` earlier in time)."""
    D = bi.E.shape[-1]
    if bj.E.shape[-1] != D:
        raise ValueError("smoothing elements of different dimension")
    batch = np.broadcast_shapes(bi.E.shape[:-2], bj.E.shape[:-2])
    E = bi.E @ bj.E
    g = _mv(bi.E, bj.g) + bi.g
    L_sqrt = tria(
        np.concatenate(
            [np.broadcast_to(bi.E @ bj.L_sqrt, batch + (D, D)), np.broadcast_to(bi.L_sqrt, batch + (D, D))],
            axis=-1,
        )
    )
    return SmoothingElement(E, g, L_sqrt)


def _first(x):
    return type(x)(*(a[:1] for a in x))


def _rest(x):
    return type(x)(*(a[1:] for a in x))


def _stacked(x):
    return type(x)(*(a[None] for a in x))


def _concat(a, b):
    return type(a)(*(np.concatenate([u, v]) for u, v in zip(a, b)))


def filtering_elements(init, transitions, observations, pool=None):
    """All ``N`` filtering elements, stacked; construction is a parallel map."""
    first = make_filtering_element(_first(transitions), _first(observations), init=_stacked(init))
    if transitions.Phi.shape[0] == 1:
        return first
    tr, ob = _rest(transitions), _rest(observations)
    rest = pool.map_batched(make_filtering_element, tr, ob) if pool is not None else make_filtering_element(tr, ob)
    return _concat(first, rest)


def smoothing_elements(filtered, transitions, pool=None):
    """All ``N + 1`` smoothing elements from the ``N + 1`` filtering marginals."""
    head = GaussianSqrt(filtered.mean[:-1], filtered.cov_sqrt[:-1])
    if pool is not None:
        body = pool.map_batched(make_smoothing_element, head, transitions)
    else:
        body = make_smoothing_element(head, transitions)
    last = terminal_smoothing_element(GaussianSqrt(filtered.mean[-1:], filtered.cov_sqrt[-1:]))
    return _concat(body, last)


def para_filter(init, transitions, observations, pool=None, stats=None):
    """Filtering marginals (``N + 1``, starting with ``init``) by a forward scan."""
    elems = filtering_elements(init, transitions, observations, pool)
    scanned = associative_scan(combine_filtering, elems, pool=pool, stats=stats)
    return GaussianSqrt(
        np.concatenate([init.mean[None], scanned.b]),
        np.concatenate([init.cov_sqrt[None], scanned.C_sqrt]),
    )


def para_rts(init, transitions, observations, pool=None):
    """Time-parallel RTS smoother.

    Args:
        init: ``GaussianSqrt`` of ``Y_0``.
        transitions: stacked ``TransitionModel`` for steps ``0..N-1``.
        observations: stacked ``AffineObservation`` for ``Y_1..Y_N``.
        pool: optional :class:`paraode.scan.WorkPool`.

    Returns:
        ``(filtered, smoothed, (filter_stats, smoother_stats))``; both
        marginal sequences hold ``N + 1`` Gaussians, index 0 being ``Y_0``.
    """
    if transitions.Phi.shape[0] < 1:
        raise ValueError("need at least one step")
    fstats, sstats = ScanStats(), ScanStats()
    filtered = para_filter(init, transitions, observations, pool, fstats)
    selems = smoothing_elements(filtered, transitions, pool)
    scanned = associative_scan(combine_smoothing, selems, reverse=True, pool=pool, stats=sstats)
    return filtered, GaussianSqrt(scanned.g, scanned.L_sqrt), (fstats, sstats)
