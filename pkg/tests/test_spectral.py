import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nagrate.core import HyperParamError, validate_hyperparams
from nagrate.spectral import (
    char_roots,
    flow_rate,
    grid_verify_optimality,
    nag_block_radius,
    optimal_params,
    piecewise_modulus,
    schur_stable,
    spectral_radius_G,
    spectral_radius_grid,
)

RHO_101 = 0.8852921330647191  # (sqrt(304) - 2) / sqrt(304)
RHO_1001 = 0.9635094817415587  # (sqrt(3004) - 2) / sqrt(3004)
RHO_10 = 0.6407893959464501  # (sqrt(31) - 2) / sqrt(31)


def residual(z, mu_alpha, beta):
    return abs(z * z - (1 + beta) * mu_alpha * z + beta * mu_alpha)


def test_char_roots_real_branch():
    rp = char_roots(0.9, 0.5)
    assert rp.discriminant == pytest.approx(0.0225, abs=1e-15)
    assert sorted(z.real for z in rp.roots) == pytest.approx([0.6, 0.75], abs=1e-15)
    assert rp.modulus_max == pytest.approx(0.75, abs=1e-15)


def test_char_roots_complex_branch():
    rp = char_roots(0.5, 0.5)
    assert rp.discriminant == pytest.approx(-0.4375, abs=1e-15)
    assert rp.modulus_max == pytest.approx(0.5, abs=1e-15)
    assert rp.roots[0] == pytest.approx(rp.roots[1].conjugate())


@pytest.mark.parametrize("m", [-1.7, -0.3, 0.0, 0.4, 1.2])
def test_char_roots_gd_reduction(m):
    rp = char_roots(m, 0.0)
    assert sorted(abs(z) for z in rp.roots) == pytest.approx(sorted([abs(m), 0.0]), abs=1e-15)
    assert rp.modulus_max == pytest.approx(abs(m), abs=1e-15)


def test_char_roots_against_numpy():
    rng = np.random.default_rng(0)
    for m, b in zip(rng.uniform(-2, 2, 200), rng.uniform(0, 1, 200)):
        ref = np.roots([1.0, -(1 + b) * m, b * m])
        assert char_roots(m, b).modulus_max == pytest.approx(np.abs(ref).max(), abs=1e-12)


def test_schur_examples():
    for b in [0.0, 0.3, 0.99]:
        assert not schur_stable(1.0, b)
    assert not schur_stable(-0.6, 0.9)
    # lam^2 + 1.14 lam - 0.54 = 0 has roots 0.36 and -1.5
    assert sorted(z.real for z in char_roots(-0.6, 0.9).roots) == pytest.approx([-1.5, 0.36], abs=1e-12)
    assert schur_stable(0.5, 0.5)
    assert char_roots(0.5, 0.5).modulus_max < 1


def test_beta_out_of_range():
    with pytest.raises(HyperParamError):
        char_roots(0.5, 1.0)
    with pytest.raises(HyperParamError):
        schur_stable(0.5, -0.1)


def test_spectral_radius_examples():
    assert spectral_radius_G([1.0], 1.0, 0.0) == 0.0
    a, b = 4 / 304, (math.sqrt(304) - 2) / (math.sqrt(304) + 2)
    assert spectral_radius_G([1.0, 101.0], a, b) == pytest.approx(RHO_101, abs=1e-12)
    # complex branch dominating: sqrt(beta (1 - alpha mu))
    a, b, mu = 0.1, 0.6, 1.0
    assert char_roots(1 - a * mu, b).discriminant < 0
    assert spectral_radius_G([mu], a, b) == pytest.approx(math.sqrt(b * (1 - a * mu)), abs=1e-15)
    with pytest.raises(ValueError):
        spectral_radius_G([], 0.1, 0.1)


def _full_operator(eigs, alpha, beta):
    """The NAG map (x^n, x^{n-1}) -> (x^{n+1}, x^n) for f = 1/2 x^T diag(eigs) x."""
    d = len(eigs)
    Ga = np.eye(d) - alpha * np.diag(eigs)
    return np.block([[(1 + beta) * Ga, -beta * Ga], [np.eye(d), np.zeros((d, d))]])


def test_spectral_radius_against_assembled_operator():
    rng = np.random.default_rng(4)
    for _ in range(50):
        eigs = np.sort(rng.uniform(0.1, 50, 6))
        b = rng.uniform(0, 0.99)
        a = rng.uniform(0.01, 1.0) * 2 * (b + 1) / (eigs[-1] * (2 * b + 1))
        full = np.abs(np.linalg.eigvals(_full_operator(eigs, a, b))).max()
        assert nag_block_radius(eigs, a, b) == pytest.approx(full, abs=1e-9)
        assert spectral_radius_G(eigs, a, b) == pytest.approx(max(full, b), abs=1e-9)


def test_spectral_radius_gd_is_max_abs():
    rng = np.random.default_rng(8)
    for _ in range(100):
        eigs = rng.uniform(0.1, 10, 5)
        a = rng.uniform(0.01, 0.5)
        assert spectral_radius_G(eigs, a, 0.0) == np.max(np.abs(1 - a * eigs))


def test_grid_and_scalar_radius_agree():
    rng = np.random.default_rng(12)
    eigs = np.linspace(1, 101, 10)
    A = rng.uniform(1e-4, 0.0137, 30)
    B = rng.uniform(0, 0.99, 30)
    vec = spectral_radius_grid(eigs, A, B)
    for a, b, r in zip(A, B, vec):
        assert r == pytest.approx(spectral_radius_G(eigs, a, b), abs=1e-12)


def test_optimal_params_values():
    c = optimal_params(1.0, 101.0)
    assert c.alpha_opt == pytest.approx(0.0131578947368, abs=1e-12)
    assert c.beta_opt == pytest.approx(0.7941920563444974, abs=1e-12)
    assert c.rho_opt == pytest.approx(RHO_101, abs=1e-12)
    assert c.rho_gd == pytest.approx(100 / 102, abs=1e-15)
    assert c.rho_flow_opt == 1.0
    assert optimal_params(1.0, 1001.0).rho_opt == pytest.approx(RHO_1001, abs=1e-12)
    assert abs(optimal_params(1.0, 1001.0).rho_opt - 0.963510) < 1e-6


@pytest.mark.parametrize("mu", [0.01, 1.0, 42.0])
def test_optimal_params_degenerate(mu):
    c = optimal_params(mu, mu)
    assert c.beta_opt == pytest.approx(0.0, abs=1e-15)
    assert c.rho_opt == pytest.approx(0.0, abs=1e-15)
    assert c.rho_gd == 0.0


def test_optimal_params_errors():
    with pytest.raises(HyperParamError):
        optimal_params(2.0, 1.0)
    with pytest.raises(HyperParamError):
        optimal_params(0.0, 1.0)


@settings(max_examples=300, deadline=None)
@given(st.floats(1e-3, 1e4), st.floats(1.0, 1e4))
def test_rate_card_invariants(mu, ratio):
    L = mu * ratio
    c = optimal_params(mu, L)
    assert 0.0 <= c.rho_opt < 1.0 and 0.0 <= c.rho_gd < 1.0
    assert validate_hyperparams(c.alpha_opt, c.beta_opt, L, 0.0)
    assert spectral_radius_G([mu, L], c.alpha_opt, c.beta_opt) == pytest.approx(c.rho_opt, abs=1e-7)


def test_flow_rate_examples():
    for mu in [0.25, 1.0, 9.0]:
        assert flow_rate(2 * math.sqrt(mu), mu) == pytest.approx(math.sqrt(mu), rel=1e-15)
    assert flow_rate(3.0, 1.0) == pytest.approx((3 - math.sqrt(5)) / 2, abs=1e-15)
    assert flow_rate(1.0, 1.0) == 0.5
    with pytest.raises(HyperParamError):
        flow_rate(0.0, 1.0)


def test_flow_rate_maximised_at_critical_damping():
    mu = 2.0
    gammas = np.linspace(0.05, 10, 2000)
    best = max(flow_rate(g, mu) for g in gammas)
    assert best <= math.sqrt(mu) + 1e-12


def test_piecewise_modulus_matches_roots():
    rng = np.random.default_rng(1)
    for m, b in zip(rng.uniform(-2, 2, 500), rng.uniform(0, 1, 500)):
        assert piecewise_modulus(m, b) == pytest.approx(char_roots(m, b).modulus_max, abs=1e-12)


@pytest.mark.parametrize("mu,L,target", [(1.0, 101.0, RHO_101), (1.0, 10.0, RHO_10), (1.0, 1.0, 0.0)])
def test_grid_verify(mu, L, target):
    rep = grid_verify_optimality(mu, L, 100, 100)
    assert rep.passed
    assert rep.rho_closed_form == pytest.approx(target, abs=1e-12)
    assert abs(rep.grid_min - target) < 1e-3
    assert rep.grid_min >= target - 1e-9


def test_grid_single_level_is_coarser():
    rep = grid_verify_optimality(1.0, 101.0, 100, 100, levels=1)
    assert rep.passed
    assert rep.coarse_gap == rep.gap > 1e-3


def test_grid_size_floor():
    with pytest.raises(ValueError):
        grid_verify_optimality(1.0, 10.0, 10, 100)
