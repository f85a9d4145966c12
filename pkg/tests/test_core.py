import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nagrate.core import (
    FunctionObjective,
    HyperParamError,
    HyperParams,
    SpectralBounds,
    hess_vec_fd,
    relative_error,
    validate_hyperparams,
)
from nagrate.objectives import QuadraticObjective, SphereProductObjective


def test_step_window_examples():
    assert validate_hyperparams(0.01, 0.5, 100.0, 0.0)
    assert not validate_hyperparams(0.02, 0.5, 100.0, 0.0)
    # bound 2(1.5)/(100 * 2) = 0.015 exactly
    assert validate_hyperparams(0.015 - 1e-12, 0.5, 100.0, 0.0)
    assert not validate_hyperparams(0.015, 0.5, 100.0, 0.0)


@pytest.mark.parametrize("L", [0.5, 1.0, 37.0, 1e4])
def test_step_window_reduces_to_gd_bound(L):
    assert validate_hyperparams(1.0 / L - 1e-9 / L, 0.0, L, 0.0)
    assert validate_hyperparams(2.0 / L * (1 - 1e-12), 0.0, L, 0.0)
    assert not validate_hyperparams(2.0 / L, 0.0, L, 0.0)


def test_step_window_default_epsilon_shrinks_window():
    # with eps = 1e-6 L the bound 2/L is no longer reachable
    assert not validate_hyperparams(2.0 / 100 * (1 - 1e-8), 0.0, 100.0)


@pytest.mark.parametrize("beta,L", [(-0.1, 1.0), (1.0, 1.0), (0.5, 0.0), (0.5, -2.0)])
def test_step_window_rejects_malformed(beta, L):
    with pytest.raises(HyperParamError):
        validate_hyperparams(0.01, beta, L, 0.0)


def test_nonpositive_alpha_is_invalid_not_error():
    assert not validate_hyperparams(0.0, 0.5, 1.0, 0.0)
    assert not validate_hyperparams(-1.0, 0.5, 1.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(1e-6, 10.0),
    st.floats(0.0, 0.999),
    st.floats(1e-3, 1e4),
    st.floats(0.0, 1.0),
    st.floats(0.0, 1.0),
)
def test_step_window_monotone(alpha, beta, L, eps, shrink):
    if validate_hyperparams(alpha, beta, L, eps) and shrink > 0.0:
        assert validate_hyperparams(alpha * shrink, beta, L, eps)


def test_hyperparams_domain():
    HyperParams(alpha=0.1, beta=0.0, gamma=1.0, epsilon=0.0)
    for kw in [dict(alpha=0.0), dict(beta=1.0), dict(beta=-0.2), dict(gamma=0.0), dict(epsilon=-1e-9)]:
        with pytest.raises(HyperParamError):
            HyperParams(**kw)


def test_spectral_bounds_domain():
    SpectralBounds(1.0, 1.0)
    SpectralBounds(0.5, 2.0, nu=0.1)
    for args in [(0.0, 1.0), (2.0, 1.0), (1.0, 2.0, 0.0)]:
        with pytest.raises(HyperParamError):
            SpectralBounds(*args)


@pytest.mark.parametrize("lam", [0.3, 1.0, 17.0])
def test_fd_hess_vec_exact_on_quadratic(lam):
    q = QuadraticObjective([lam])
    for x in [-2.0, 0.0, 5.0]:
        np.testing.assert_allclose(hess_vec_fd(q, np.array([x]), np.array([1.0]), 1e-5), [lam], rtol=1e-9)


def test_fd_hess_vec_zero_direction():
    obj = SphereProductObjective.indexed(3, 4)
    x = np.random.default_rng(0).standard_normal(obj.dimension)
    assert np.all(hess_vec_fd(obj, x, np.zeros(obj.dimension), 1e-5) == 0.0)


def test_fd_hess_vec_at_minimizer_u_direction():
    obj = SphereProductObjective.indexed(4, 3)
    x = obj.reference_minimizer
    w = np.zeros(obj.dimension)
    w[0] = 1.0
    hv = hess_vec_fd(obj, x, w, 1e-5)
    expected = np.zeros(obj.dimension)
    expected[0] = 1.0  # lambda_1
    np.testing.assert_allclose(hv, expected, atol=1e-9)


def test_fd_hess_vec_rejects_bad_step():
    q = QuadraticObjective([1.0])
    with pytest.raises(ValueError):
        hess_vec_fd(q, np.array([1.0]), np.array([1.0]), 0.0)


def test_function_objective_falls_back_to_fd():
    lam = np.array([1.0, 4.0])
    obj = FunctionObjective(2, lambda x: 0.5 * np.dot(lam * x, x), lambda x: lam * x, reference_minimizer=[0, 0])
    assert not obj.has_analytic_hess_vec
    np.testing.assert_allclose(obj.hess_vec(np.array([0.3, -1.0]), np.array([1.0, 1.0])), lam, rtol=1e-8)
    assert QuadraticObjective([1.0]).has_analytic_hess_vec


@pytest.mark.parametrize(
    "obj",
    [QuadraticObjective(np.linspace(0.5, 20.0, 7)), SphereProductObjective.indexed(8, 4), SphereProductObjective(3, 2, [2, 0.5, 9, 1])],
    ids=["quadratic", "sphere-indexed", "sphere-unsorted"],
)
def test_analytic_hess_vec_matches_fd(obj):
    rng = np.random.default_rng(11)
    ref = obj.reference_minimizer
    for _ in range(100):
        d = rng.standard_normal(obj.dimension)
        x = ref + rng.uniform() * d / np.linalg.norm(d)
        w = rng.standard_normal(obj.dimension)
        assert relative_error(obj.hess_vec(x, w), hess_vec_fd(obj, x, w, 1e-5)) < 1e-6


def test_evaluations_are_deterministic():
    obj = SphereProductObjective.indexed(5, 3)
    x = np.random.default_rng(3).standard_normal(obj.dimension)
    assert obj.value(x) == obj.value(x)
    assert np.array_equal(obj.grad(x), obj.grad(x))


@pytest.mark.parametrize("obj", [QuadraticObjective([1.0, 3.0]), SphereProductObjective.indexed(6, 3)])
def test_reference_minimizer_is_stationary(obj):
    x = obj.reference_minimizer
    assert np.linalg.norm(obj.grad(x)) <= 1e-12 * (1 + abs(obj.value(x)))
