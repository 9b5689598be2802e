"""Sequential square-root Kalman filter and Rauch-Tung-Striebel smoother.

Indexing convention shared with :mod:`paraode.parallel`: ``transitions`` is
stacked over ``n = 0..N-1`` and maps ``Y_n`` to ``Y_{n+1}``;
``observations`` is stacked over ``n = 0..N-1`` and constrains
``Y_{n+1}``. Filtered and smoothed sequences have ``N + 1`` entries, the
first being the (smoothed) initial distribution.
"""

import numpy as np

from .errors import SingularFactorError
from .linalg import check_triangular_factor, right_solve, tria
from .statespace import GaussianSqrt, stack_gaussians


def _check_dims(*pairs):
    for a, b in pairs:
        if a != b:
            raise ValueError(f"dimension mismatch: {a} vs {b}")


def kf_predict(state, trans):
    """Prediction ``N(Phi m, Phi P Phi^T + Q)`` in square-root form."""
    _check_dims((trans.Phi.shape[-1], state.mean.shape[-1]), (trans.Q_sqrt.shape[-2], trans.Phi.shape[-2]))
    mean = (trans.Phi @ state.mean[..., None])[..., 0]
    cov_sqrt = tria(np.concatenate([trans.Phi @ state.cov_sqrt, trans.Q_sqrt], axis=-1))
    return GaussianSqrt(mean, cov_sqrt)


def _update_blocks(P_sqrt, obs):
    """Square-root update blocks ``(S_sqrt, K, P_post_sqrt)``."""
    H, R_sqrt = obs.H, obs.R_sqrt
    k, D = H.shape[-2], H.shape[-1]
    _check_dims((P_sqrt.shape[-1], D))
    batch = np.broadcast_shapes(H.shape[:-2], P_sqrt.shape[:-2])
    P_sqrt = np.broadcast_to(P_sqrt, batch + P_sqrt.shape[-2:])
    top = np.concatenate([H @ P_sqrt, np.broadcast_to(R_sqrt, batch + (k, k))], axis=-1)
    bottom = np.concatenate([P_sqrt, np.zeros(batch + (D, k))], axis=-1)
    Psi = tria(np.concatenate([top, bottom], axis=-2))
    S_sqrt = Psi[..., :k, :k]
    try:
        check_triangular_factor(S_sqrt, "innovation covariance")
    except SingularFactorError as err:
        raise SingularFactorError(
            "singular innovation covariance; the observation matrix is degenerate"
        ) from err
    K = right_solve(Psi[..., k:, :k], S_sqrt)
    return S_sqrt, K, Psi[..., k:, k:]


def kf_update(pred, obs):
    """Condition ``pred`` on ``H Y = d_vec`` (plus noise ``R``).

    Raises:
        SingularFactorError: when ``H P H^T + R`` is singular.
    """
    if obs.H.shape[-2] == 0:
        return pred
    S_sqrt, K, P_sqrt = _update_blocks(pred.cov_sqrt, obs)
    resid = (obs.H @ pred.mean[..., None])[..., 0] - obs.d_vec
    mean = pred.mean - (K @ resid[..., None])[..., 0]
    return GaussianSqrt(mean, P_sqrt)


def smoothing_gain(filtered, trans):
    """Backward-conditional blocks ``(E, Pi22)`` for one step.

    ``E = P Phi^T (Phi P Phi^T + Q)^-1`` and ``Pi22 Pi22^T`` is the
    covariance of ``Y_n`` given ``Y_{n+1}``.
    """
    P = filtered.cov_sqrt
    D = P.shape[-1]
    batch = np.broadcast_shapes(P.shape[:-2], trans.Phi.shape[:-2])
    P = np.broadcast_to(P, batch + (D, D))
    Q = np.broadcast_to(trans.Q_sqrt, batch + (D, D))
    top = np.concatenate([trans.Phi @ P, Q], axis=-1)
    bottom = np.concatenate([P, np.zeros(batch + (D, D))], axis=-1)
    Pi = tria(np.concatenate([top, bottom], axis=-2))
    Pi11 = Pi[..., :D, :D]
    try:
        check_triangular_factor(Pi11, "predicted covariance")
    except SingularFactorError as err:
        raise SingularFactorError("degenerate prediction in smoothing step") from err
    return right_solve(Pi[..., D:, :D], Pi11), Pi[..., D:, D:]


def seq_filter(init, transitions, observations):
    """Forward square-root Kalman filter; returns ``N + 1`` filtering marginals."""
    N = transitions.Phi.shape[0]
    out = [init]
    state = init
    for n in range(N):
        trans = type(transitions)(*(a[n] for a in transitions))
        obs = type(observations)(*(a[n] for a in observations))
        state = kf_update(kf_predict(state, trans), obs)
        out.append(state)
    return stack_gaussians(out)


def rts_smooth_pass(filtered, transitions):
    """Backward RTS pass over stacked filtering marginals (``N + 1`` of them)."""
    N = transitions.Phi.shape[0]
    if filtered.mean.shape[0] != N + 1:
        raise ValueError("need one more filtering marginal than transitions")
    means = np.empty_like(filtered.mean)
    sqrts = np.empty_like(filtered.cov_sqrt)
    means[N], sqrts[N] = filtered.mean[N], filtered.cov_sqrt[N]
    for n in range(N - 1, -1, -1):
        trans = type(transitions)(*(a[n] for a in transitions))
        f = filtered.at(n)
        E, L = smoothing_gain(f, trans)
        means[n] = f.mean + E @ (means[n + 1] - trans.Phi @ f.mean)
        sqrts[n] = tria(np.concatenate([E @ sqrts[n + 1], L], axis=-1))
    return GaussianSqrt(means, sqrts)


def seq_rts(init, transitions, observations):
    """Filter then smooth; returns ``(filtered, smoothed)``."""
    filtered = seq_filter(init, transitions, observations)
    return filtered, rts_smooth_pass(filtered, transitions)


def innovations(filtered, transitions, observations):
    """Innovations ``z_n = H m^- - d`` and factors ``sqrt(S_n)`` of a filter pass.

    Recomputed from the filtering marginals, so the same routine serves the
    sequential and parallel filters. Batched over all steps.
    """
    prev = GaussianSqrt(filtered.mean[:-1], filtered.cov_sqrt[:-1])
    pred = kf_predict(prev, transitions)
    H = observations.H
    z = (H @ pred.mean[..., None])[..., 0] - observations.d_vec
    S_sqrt = tria(np.concatenate([H @ pred.cov_sqrt, observations.R_sqrt], axis=-1))
    return z, S_sqrt
