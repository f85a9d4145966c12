"""NAG and gradient descent iterations with the stopping protocol of the experiments."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    HyperParamError,
    HyperParams,
    IterateState,
    NonFiniteGradientError,
    Objective,
    TrajectorySample,
    Vector,
    validate_hyperparams,
)
from .lyapunov import LyapunovMonitor

DIVERGENCE_FACTOR = 1e6


class Method(str, enum.Enum):
    NAG = "NAG"
    GD = "GD"
    FLOW = "FLOW"


class Termination(str, enum.Enum):
    TOLERANCE = "tolerance"
    MAX_ITERS = "max_iters"
    DIVERGED = "diverged"


@dataclass(frozen=True)
class StopCriteria:
    f_tol: float = 1e-20
    max_iters: int = 100_000
    f_target: float = 0.0

    def __post_init__(self):
        if not self.f_tol >= 0.0:
            raise ValueError(f"f_tol must be nonnegative, got {self.f_tol}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be a positive integer, got {self.max_iters}")


@dataclass
class Trajectory:
    """Per-iteration records of a run.

    For discrete runs sample ``n`` holds f(x^n), |grad f(x^n)|, |x^{n+1} - x^n|
    and the Lyapunov value at (x^n, v_n); ``final_point`` is the last computed
    iterate x^{N+1}. Flow trajectories use time as the index and |x'(t)| as
    the step norm.
    """

    samples: list[TrajectorySample]
    terminated_by: Termination
    final_point: Vector
    start_norm: float = 0.0
    params_valid: Optional[bool] = None
    kind: str = "discrete"
    extras: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.samples)

    @property
    def indices(self) -> np.ndarray:
        return np.array([s.index for s in self.samples], dtype=float)

    @property
    def step_norms(self) -> np.ndarray:
        return np.array([s.step_norm for s in self.samples], dtype=float)

    @property
    def f_values(self) -> np.ndarray:
        return np.array([s.f_val for s in self.samples], dtype=float)

    @property
    def lyapunov_values(self) -> np.ndarray:
        return np.array([s.lyapunov for s in self.samples if s.lyapunov is not None], dtype=float)

    @classmethod
    def from_step_norms(cls, step_norms, start: int = 1, start_norm: float = 0.0) -> "Trajectory":
        """Bare trajectory carrying only step norms, mainly for rate fitting."""
        samples = [
            TrajectorySample(index=float(start + i), f_val=0.0, grad_norm=0.0, step_norm=float(s))
            for i, s in enumerate(step_norms)
        ]
        return cls(samples, Termination.MAX_ITERS, np.zeros(1), start_norm=start_norm)


def _checked_grad(obj: Objective, y: Vector, n: int, x: Vector) -> Vector:
    g = obj.grad(y)
    if not np.all(np.isfinite(g)):
        raise NonFiniteGradientError(f"non-finite gradient at iteration n={n} (|x| = {np.linalg.norm(x):.6e})")
    return g


def nag_step(state: IterateState, params: HyperParams, obj: Objective) -> IterateState:
    """One NAG update: y = x + beta (x - x_prev), x_new = y - alpha grad f(y)."""
    x = state.x
    y = x + params.beta * (x - state.x_prev)
    x_new = y - params.alpha * _checked_grad(obj, y, state.n, x)
    return IterateState(x=x_new, x_prev=x, n=state.n + 1)


def gd_step(state: IterateState, alpha: float, obj: Objective) -> IterateState:
    if not alpha > 0.0:
        raise HyperParamError(f"alpha must be positive, got {alpha}")
    x = state.x
    x_new = x - alpha * _checked_grad(obj, x, state.n, x)
    return IterateState(x=x_new, x_prev=x, n=state.n + 1)


def run(
    obj: Objective,
    method: Method | str,
    params: HyperParams,
    x0: Vector,
    x1: Optional[Vector] = None,
    stop: StopCriteria = StopCriteria(),
    monitor: Optional[LyapunovMonitor] = None,
    L: Optional[float] = None,
    lyapunov_stride: int = 1,
) -> Trajectory:
    """Iterate NAG or GD from (x0, x1) until the objective reaches the target.

    Starting at n = 1, each iteration evaluates f(x^n) and |grad f(x^n)|,
    computes x^{n+1} and records a sample. The run stops after recording
    sample n when |f(x^n) - f_target| < f_tol, when n reaches ``max_iters``,
    or when f(x^n) exceeds 1e6 (1 + f(x^1)) (divergence guard).

    ``x1`` defaults to ``x0`` (zero initial velocity). When ``L`` is given the
    step size is checked against the admissible window once; an invalid step
    size is recorded in ``params_valid`` but the run proceeds.
    """
    method = Method(method)
    if method is Method.FLOW:
        raise ValueError("use flow.flow_run for the continuous dynamics")
    if params.alpha is None:
        raise HyperParamError("discrete methods need a step size alpha")
    x0 = np.asarray(x0, dtype=float)
    x1 = x0.copy() if x1 is None else np.asarray(x1, dtype=float)
    if x0.shape != (obj.dimension,) or x1.shape != (obj.dimension,):
        raise ValueError(f"initial points must have dimension {obj.dimension}")

    beta = params.beta if method is Method.NAG else 0.0
    params_valid = None
    if L is not None:
        params_valid = validate_hyperparams(params.alpha, beta, L, params.epsilon or None)

    state = IterateState(x=x1, x_prev=x0, n=1)
    f_start = obj.value(x1)
    limit = DIVERGENCE_FACTOR * (1.0 + abs(f_start))
    samples: list[TrajectorySample] = []
    terminated = Termination.MAX_ITERS

    while True:
        n = state.n
        x = state.x
        f_x = obj.value(x)
        if not math.isfinite(f_x) or f_x > limit:
            terminated = Termination.DIVERGED
            break
        g_x = obj.grad(x)
        lyap = None
        if monitor is not None and (n - 1) % lyapunov_stride == 0:
            lyap = monitor.discrete(x, x - state.x_prev, f_x)
        if method is Method.NAG:
            state = nag_step(state, params, obj)
        else:
            state = gd_step(state, params.alpha, obj)
        samples.append(
            TrajectorySample(
                index=n,
                f_val=f_x,
                grad_norm=float(np.linalg.norm(g_x)),
                step_norm=float(np.linalg.norm(state.x - x)),
                lyapunov=lyap,
            )
        )
        if abs(f_x - stop.f_target) < stop.f_tol:
            terminated = Termination.TOLERANCE
            break
        if n >= stop.max_iters:
            break

    return Trajectory(
        samples=samples,
        terminated_by=terminated,
        final_point=state.x,
        start_norm=float(np.linalg.norm(x1)),
        params_valid=params_valid,
    )
