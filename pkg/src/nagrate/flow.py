"""Heavy Ball flow x'' + gamma x' + grad f(x) = 0 integrated with fixed-step RK4."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import HyperParamError, NonFiniteGradientError, Objective, TrajectorySample, Vector
from .lyapunov import LyapunovMonitor
from .optimizers import DIVERGENCE_FACTOR, Termination, Trajectory


@dataclass(frozen=True)
class FlowState:
    t: float
    x: Vector
    v: Vector


def default_step(L: float) -> float:
    return min(1e-2, 0.1 / math.sqrt(L))


def _accel(obj: Objective, x: Vector, v: Vector, gamma: float, t: float) -> Vector:
    g = obj.grad(x)
    if not np.all(np.isfinite(g)):
        raise NonFiniteGradientError(f"non-finite gradient at t={t:.6g} (|x| = {np.linalg.norm(x):.6e})")
    return -gamma * v - g


def flow_step(state: FlowState, gamma: float, obj: Objective, h: float) -> FlowState:
    """One classical RK4 step of (x' = v, v' = -gamma v - grad f(x))."""
    if not h > 0.0:
        raise ValueError(f"step must be positive, got {h}")
    if not gamma > 0.0:
        raise HyperParamError(f"gamma must be positive, got {gamma}")
    x, v, t = state.x, state.v, state.t
    k1x, k1v = v, _accel(obj, x, v, gamma, t)
    x2, v2 = x + 0.5 * h * k1x, v + 0.5 * h * k1v
    k2x, k2v = v2, _accel(obj, x2, v2, gamma, t)
    x3, v3 = x + 0.5 * h * k2x, v + 0.5 * h * k2v
    k3x, k3v = v3, _accel(obj, x3, v3, gamma, t)
    x4, v4 = x + h * k3x, v + h * k3v
    k4x, k4v = v4, _accel(obj, x4, v4, gamma, t)
    return FlowState(
        t=t + h,
        x=x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        v=v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    )


def flow_run(
    obj: Objective,
    gamma: float,
    x0: Vector,
    v0: Optional[Vector] = None,
    h: Optional[float] = None,
    t_end: float = 10.0,
    record_stride: int = 1,
    monitor: Optional[LyapunovMonitor] = None,
    L: Optional[float] = None,
    f_floor: Optional[float] = None,
) -> Trajectory:
    """Integrate the flow from (x0, v0) up to ``t_end``.

    A sample is recorded at t = 0 and after every ``record_stride`` steps,
    with |v| in the step-norm slot and the continuous Lyapunov value when a
    monitor is given. ``h`` defaults to min(1e-2, 0.1/sqrt(L)) when ``L`` is
    known, else 1e-2. If ``f_floor`` is set the run stops once f drops below it.
    """
    if not t_end > 0.0:
        raise ValueError("t_end must be positive")
    if h is None:
        h = default_step(L) if L is not None else 1e-2
    if record_stride < 1:
        raise ValueError("record_stride must be a positive integer")
    x0 = np.asarray(x0, dtype=float)
    v0 = np.zeros_like(x0) if v0 is None else np.asarray(v0, dtype=float)
    if x0.shape != (obj.dimension,) or v0.shape != (obj.dimension,):
        raise ValueError(f"initial state must have dimension {obj.dimension}")

    n_steps = int(math.ceil(t_end / h - 1e-9))
    state = FlowState(0.0, x0, v0)
    f0 = obj.value(x0)
    limit = DIVERGENCE_FACTOR * (1.0 + abs(f0))
    samples: list[TrajectorySample] = []
    terminated = Termination.MAX_ITERS

    def record(st: FlowState) -> float:
        f_x = obj.value(st.x)
        g_x = obj.grad(st.x)
        lyap = monitor.continuous(st.x, st.v, f_x, g_x) if monitor is not None else None
        samples.append(
            TrajectorySample(
                index=st.t,
                f_val=f_x,
                grad_norm=float(np.linalg.norm(g_x)),
                step_norm=float(np.linalg.norm(st.v)),
                lyapunov=lyap,
            )
        )
        return f_x

    record(state)
    for i in range(1, n_steps + 1):
        # multiply rather than accumulate so recorded times are exact multiples of h
        state = flow_step(state, gamma, obj, h)
        state = FlowState(i * h, state.x, state.v)
        if i % record_stride == 0 or i == n_steps:
            f_x = record(state)
            if not math.isfinite(f_x) or f_x > limit:
                terminated = Termination.DIVERGED
                break
            if f_floor is not None and f_x < f_floor:
                terminated = Termination.TOLERANCE
                break

    return Trajectory(
        samples=samples,
        terminated_by=terminated,
        final_point=state.x,
        start_norm=float(np.linalg.norm(x0)),
        kind="flow",
        extras={"gamma": gamma, "h": h, "final_velocity_norm": float(np.linalg.norm(state.v))},
    )


def analytic_1d_solution(lam: float, gamma: float, x0: float, v0: float, t):
    """Closed-form solution of x'' + gamma x' + lam x = 0 (all damping regimes)."""
    if not (lam > 0.0 and gamma > 0.0):
        raise ValueError("lam and gamma must be positive")
    t = np.asarray(t, dtype=float)
    disc = gamma * gamma - 4.0 * lam
    half = -0.5 * gamma
    if disc > 0.0:
        s = 0.5 * math.sqrt(disc)
        r1, r2 = half + s, half - s
        A = (v0 - r2 * x0) / (r1 - r2)
        B = x0 - A
        out = A * np.exp(r1 * t) + B * np.exp(r2 * t)
    elif disc == 0.0:
        out = (x0 + (v0 - half * x0) * t) * np.exp(half * t)
    else:
        w = 0.5 * math.sqrt(-disc)
        out = np.exp(half * t) * (x0 * np.cos(w * t) + (v0 - half * x0) / w * np.sin(w * t))
    return float(out) if out.ndim == 0 else out
