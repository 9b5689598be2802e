import numpy as np
import pytest

from paraode.errors import ReferenceNotConvergedError
from paraode.problems import PROBLEMS, DenseReference, get_problem, logistic, rigid_body, rk4_reference, rmse, van_der_pol
from paraode.statespace import IVProblem


def test_registry_names():
    assert set(PROBLEMS) == {"logistic", "rigidbody", "vanderpol"}
    with pytest.raises(ValueError):
        get_problem("lorenz")


def test_logistic_definition():
    p = logistic()
    np.testing.assert_array_equal(p.ivp.y0, [0.01])
    assert p.ivp.t_span == (0.0, 10.0)
    np.testing.assert_allclose(p.ivp.jac(np.array([0.25]), 0.0), [[0.5]])
    assert p.reference(0.0)[0] == pytest.approx(0.01, rel=1e-15)
    assert p.reference(10.0)[0] == pytest.approx(0.99552, abs=1e-5)
    assert p.reference(10.0)[0] == pytest.approx(0.01 * np.exp(10) / (1 + 0.01 * np.expm1(10)), rel=1e-14)
    assert p.reference(60.0)[0] == pytest.approx(1.0, abs=1e-12)


def test_rigid_body_definition():
    p = rigid_body()
    np.testing.assert_array_equal(p.ivp.y0, [1.0, 0.0, 0.9])
    np.testing.assert_allclose(p.ivp.f(p.ivp.y0, 0.0), [0.0, 1.125, 0.0])
    np.testing.assert_allclose(p.ivp.jac(p.ivp.y0, 0.0)[0], [0.0, -1.8, 0.0])


def test_van_der_pol_definition():
    p = van_der_pol()
    np.testing.assert_array_equal(p.ivp.y0, [2.0, 0.0])
    assert p.ivp.t_span == (0.0, 6.3)
    np.testing.assert_allclose(p.ivp.f(p.ivp.y0, 0.0), [0.0, -2.0])
    np.testing.assert_allclose(p.ivp.jac(p.ivp.y0, 0.0), [[0.0, 1.0], [-1.0, -3.0]])


@pytest.mark.parametrize("factory", [rigid_body, van_der_pol])
def test_analytic_jacobian_matches_differences(factory, rng):
    ivp = factory().ivp
    y = rng.normal(size=ivp.d)
    eps = 1e-6
    fd = np.stack([(ivp.f(y + eps * e, 0.0) - ivp.f(y - eps * e, 0.0)) / (2 * eps) for e in np.eye(ivp.d)], axis=1)
    np.testing.assert_allclose(ivp.jac(y, 0.0), fd, atol=1e-8)


def test_default_grids():
    assert [get_problem(n).grid_size for n in ("logistic", "vanderpol", "rigidbody")] == [30, 100, 150]
    g = logistic().grid()
    assert g.shape == (31,) and g[0] == 0.0 and g[-1] == 10.0


def test_rk4_decay():
    ivp = IVProblem(lambda y, t: -y, [1.0], (0.0, 2.0))
    ref = rk4_reference(ivp, 1e-3)
    assert abs(ref(2.0)[0] - np.exp(-2.0)) <= 1e-10


def test_rk4_logistic_matches_closed_form():
    p = logistic()
    ref = rk4_reference(p.ivp, 10.0 / 2**13)
    grid = p.grid()
    np.testing.assert_allclose(ref(grid), p.reference(grid), atol=1e-9)


def test_van_der_pol_self_check():
    ref = van_der_pol().reference.build()
    assert ref.endpoint_change < 1e-10 * np.max(np.abs(ref(6.3)))


def test_reference_not_converged():
    ivp = IVProblem(lambda y, t: -y, [1.0], (0.0, 5.0))
    with pytest.raises(ReferenceNotConvergedError):
        DenseReference(ivp, 0.5).build()


def test_rigid_body_quadratic_invariants():
    ref = rigid_body().reference
    y = ref(np.linspace(0, 20, 401))
    for inv in (y[:, 0] ** 2 - 4 * y[:, 2] ** 2, 2 * y[:, 1] ** 2 + 5 * y[:, 2] ** 2):
        assert np.max(np.abs(inv - inv[0])) < 1e-8


def test_rmse_examples(rng):
    grid = np.linspace(0, 1, 7)
    ref = rng.normal(size=(7, 2))
    assert rmse(ref, ref, grid) == 0.0
    assert rmse(ref + 0.3, ref, grid) == pytest.approx(0.3)
    pert = ref + rng.normal(size=ref.shape)
    assert rmse(pert, ref, grid) == pytest.approx(np.sqrt(np.mean((pert - ref) ** 2)))
    assert rmse(ref[:, :1], lambda t: np.sin(t)[:, None], grid) == pytest.approx(
        np.sqrt(np.mean((ref[:, 0] - np.sin(grid)) ** 2))
    )
