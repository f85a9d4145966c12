import math

import numpy as np
import pytest

from nagrate.core import HyperParamError
from nagrate.flow import FlowState, analytic_1d_solution, default_step, flow_run, flow_step
from nagrate.objectives import QuadraticObjective, SphereProductObjective, near_manifold_init
from nagrate.optimizers import Termination

# x(t) for x'' + 3x' + x = 0, x(0) = 1, x'(0) = 0, from scipy.linalg.expm of [[0, 1], [-1, -3]]
X1_GAMMA3 = 0.7866455993033681
# (lam, gamma) -> x(0.5), x(2.0), same initial data, same matrix-exponential oracle
EXPM_VALUES = {
    (1.0, 3.0): (0.9211332218348366, 0.5444956660098629),
    (1.0, 2.0): (0.9097959895689501, 0.40600584970983655),
    (4.0, 1.0): (0.6070548491670358, -0.3372345973335528),
}


def integrate_1d(lam, gamma, h, t_end, x0=1.0, v0=0.0):
    q = QuadraticObjective([lam])
    st = FlowState(0.0, np.array([x0]), np.array([v0]))
    ts, xs = [0.0], [x0]
    for i in range(1, int(round(t_end / h)) + 1):
        st = flow_step(st, gamma, q, h)
        ts.append(i * h)
        xs.append(st.x[0])
    return np.array(ts), np.array(xs)


def test_analytic_solution_against_matrix_exponential():
    assert analytic_1d_solution(1.0, 3.0, 1.0, 0.0, 1.0) == pytest.approx(X1_GAMMA3, abs=1e-14)
    for (lam, g), (a, b) in EXPM_VALUES.items():
        assert analytic_1d_solution(lam, g, 1.0, 0.0, 0.5) == pytest.approx(a, abs=1e-13)
        assert analytic_1d_solution(lam, g, 1.0, 0.0, 2.0) == pytest.approx(b, abs=1e-13)


@pytest.mark.parametrize("lam,gamma", [(1.0, 3.0), (1.0, 2.0), (4.0, 1.0), (2.0, 0.5)])
def test_analytic_solution_initial_data(lam, gamma):
    assert analytic_1d_solution(lam, gamma, 0.7, -0.3, 0.0) == pytest.approx(0.7, abs=1e-15)
    eps = 1e-6
    vel = (analytic_1d_solution(lam, gamma, 0.7, -0.3, eps) - analytic_1d_solution(lam, gamma, 0.7, -0.3, -eps)) / (2 * eps)
    assert vel == pytest.approx(-0.3, abs=1e-8)


def test_analytic_critical_branch():
    t = np.linspace(0, 5, 11)
    expected = (2.0 + (0.5 + 2.0 * 2.0) * t) * np.exp(-2.0 * t)
    np.testing.assert_allclose(analytic_1d_solution(4.0, 4.0, 2.0, 0.5, t), expected, rtol=1e-14)


def test_rk4_single_point():
    ts, xs = integrate_1d(1.0, 3.0, 1e-3, 1.0)
    assert xs[-1] == pytest.approx(X1_GAMMA3, abs=1e-8)


@pytest.mark.parametrize("lam,gamma", [(1.0, 3.0), (1.0, 2.0), (4.0, 1.0)])
def test_rk4_matches_oracle(lam, gamma):
    ts, xs = integrate_1d(lam, gamma, 1e-3, 10.0)
    assert np.max(np.abs(xs - analytic_1d_solution(lam, gamma, 1.0, 0.0, ts))) <= 1e-8


@pytest.mark.parametrize("lam,gamma", [(1.0, 3.0), (4.0, 1.0)])
def test_rk4_fourth_order(lam, gamma):
    errs = []
    for h in (0.1, 0.05):
        ts, xs = integrate_1d(lam, gamma, h, 5.0)
        errs.append(np.max(np.abs(xs - analytic_1d_solution(lam, gamma, 1.0, 0.0, ts))))
    assert 12.0 <= errs[0] / errs[1] <= 20.0


def test_equilibrium_is_fixed():
    obj = SphereProductObjective.indexed(5, 3)
    st = FlowState(0.0, obj.reference_minimizer, np.zeros(obj.dimension))
    for h in (1e-3, 0.1, 1.0):
        nxt = flow_step(st, 2.0, obj, h)
        assert np.array_equal(nxt.x, st.x) and np.array_equal(nxt.v, st.v) and nxt.t == h


def test_flow_step_validation():
    st = FlowState(0.0, np.zeros(1), np.zeros(1))
    with pytest.raises(ValueError):
        flow_step(st, 1.0, QuadraticObjective([1.0]), 0.0)
    with pytest.raises(HyperParamError):
        flow_step(st, 0.0, QuadraticObjective([1.0]), 0.1)


def test_overdamped_velocity_decays_monotonically():
    q = QuadraticObjective([1.0, 2.0])
    traj = flow_run(q, 50.0, np.array([1.0, -1.0]), np.array([-3.0, 2.0]), h=1e-3, t_end=5.0)
    v = traj.step_norms
    assert np.all(np.diff(v) <= 0.0)


def test_flow_run_constant_on_manifold():
    obj = SphereProductObjective.indexed(4, 3)
    traj = flow_run(obj, 2.0, obj.reference_minimizer, t_end=1.0, L=5.0)
    assert all(s.f_val == 0.0 and s.step_norm == 0.0 for s in traj.samples)
    assert np.array_equal(traj.final_point, obj.reference_minimizer)


def test_flow_run_times_and_stride():
    traj = flow_run(QuadraticObjective([1.0]), 3.0, np.array([1.0]), h=0.01, t_end=1.0, record_stride=10)
    np.testing.assert_allclose(traj.indices, np.arange(11) * 0.1, atol=1e-12)
    assert traj.kind == "flow"


def test_default_step():
    assert default_step(1.0) == 1e-2
    assert default_step(101.0) == pytest.approx(0.1 / math.sqrt(101))


@pytest.mark.parametrize(
    "obj,x0",
    [
        (QuadraticObjective([1.0, 9.0]), np.array([1.0, 0.5])),
        (SphereProductObjective.indexed(10, 4), None),
    ],
)
@pytest.mark.parametrize("gamma", [0.5, 2.0, 6.0])
def test_energy_dissipation(obj, x0, gamma):
    if x0 is None:
        x0 = near_manifold_init(obj, 0.1, 0.1, 2)
    traj = flow_run(obj, gamma, x0, h=1e-2, t_end=10.0)
    energy = traj.f_values + 0.5 * traj.step_norms**2
    assert np.all(np.diff(energy) <= 1e-10)


def test_flow_divergence_guard():
    # RK4 is unstable once h sqrt(lam) is far outside its stability region
    obj = QuadraticObjective([1e4])
    traj = flow_run(obj, 1.0, np.array([1.0]), h=0.1, t_end=100.0)
    assert traj.terminated_by is Termination.DIVERGED
    assert traj.samples[-1].index < 100.0
