import numpy as np
import pytest

from paraode.prior import IWPPrior, preconditioned_model
from paraode.statespace import AffineObservation, GaussianSqrt

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0])):
        status, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{status}] criterion {key}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def prod(L):
    return L @ np.swapaxes(L, -1, -2)


def random_sqrt(rng, D, batch=()):
    return np.tril(rng.normal(size=batch + (D, D)))


def random_linear_model(rng, N, nu=1, d=2, k=None, sigma=1.0, init_cov=True):
    """Preconditioned IWP transitions on a uniform grid with random affine observations."""
    prior = IWPPrior(nu, d, sigma)
    model = preconditioned_model(prior, np.linspace(0.0, 1.0, N + 1))
    D = prior.D
    k = d if k is None else k
    obs = AffineObservation.noiseless(rng.normal(size=(N, k, D)), rng.normal(size=(N, k)))
    cov_sqrt = 0.5 * random_sqrt(rng, D) if init_cov else np.zeros((D, D))
    init = GaussianSqrt(rng.normal(size=D), cov_sqrt)
    return init, model.transitions, obs


def dense_condition(init, transitions, observations, upto=None):
    """Brute-force joint-Gaussian conditioning on the stacked states ``Y_0..Y_N``.

    Conditions on the observations of ``Y_1..Y_upto`` (all if ``upto`` is None)
    and returns the means ``(N+1, D)`` and covariances ``(N+1, D, D)``.
    """
    Phi, Q_sqrt = transitions.Phi, transitions.Q_sqrt
    N, D = Phi.shape[0], Phi.shape[-1]
    upto = N if upto is None else upto
    # Y_n = sum_k G[n, k] w_k with w_0 ~ init, w_k ~ N(0, I) for k >= 1
    G = np.zeros(((N + 1) * D, (N + 1) * D))
    mu = np.zeros((N + 1) * D)
    mu[:D] = init.mean
    G[:D, :D] = init.cov_sqrt
    for n in range(1, N + 1):
        rows = slice(n * D, (n + 1) * D)
        prev = slice((n - 1) * D, n * D)
        G[rows] = Phi[n - 1] @ G[prev]
        G[rows, n * D:(n + 1) * D] = Q_sqrt[n - 1]
        mu[rows] = Phi[n - 1] @ mu[prev]
    Sigma = G @ G.T
    k = observations.H.shape[1]
    Hbig = np.zeros((upto * k, (N + 1) * D))
    dbig = np.zeros(upto * k)
    for n in range(1, upto + 1):
        Hbig[(n - 1) * k:n * k, n * D:(n + 1) * D] = observations.H[n - 1]
        dbig[(n - 1) * k:n * k] = observations.d_vec[n - 1]
    if upto:
        S = Hbig @ Sigma @ Hbig.T
        gain = np.linalg.solve(S, Hbig @ Sigma).T
        mu = mu + gain @ (dbig - Hbig @ mu)
        Sigma = Sigma - gain @ Hbig @ Sigma
    means = mu.reshape(N + 1, D)
    covs = np.stack([Sigma[n * D:(n + 1) * D, n * D:(n + 1) * D] for n in range(N + 1)])
    return means, covs
