"""Lyapunov functions for NAG and the Heavy Ball flow, and audits of their decay."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .core import HyperParams, Objective, SpectralBounds, Vector, default_epsilon

BURN_IN = 5


@dataclass(frozen=True)
class LyapunovMonitor:
    """Everything needed to evaluate either Lyapunov function at a state (x, v).

    ``reference`` should be a minimizer; the Hessian there is applied through
    ``hess_vec_at_ref``. A warning is issued when the gradient at the
    reference is not small, since the Lyapunov value then loses its meaning.
    """

    objective: Objective
    reference: Vector
    hess_vec_at_ref: Callable[[Vector], Vector]
    bounds: SpectralBounds
    params: HyperParams
    f_star: float = 0.0

    def __post_init__(self):
        g = float(np.linalg.norm(self.objective.grad(self.reference)))
        if g > 1e-8:
            warnings.warn(f"Lyapunov reference is not stationary (|grad| = {g:.3e})", RuntimeWarning, stacklevel=3)

    @classmethod
    def at(cls, objective: Objective, reference: Vector, bounds: SpectralBounds, params: HyperParams) -> "LyapunovMonitor":
        reference = np.asarray(reference, dtype=float).copy()
        return cls(
            objective=objective,
            reference=reference,
            hess_vec_at_ref=lambda w: objective.hess_vec(reference, w),
            bounds=bounds,
            params=params,
            f_star=objective.value(reference),
        )

    def discrete(self, x: Vector, v: Vector, f_x: Optional[float] = None) -> float:
        return discrete_lyapunov(self, x, v, self.f_star, f_x)

    def continuous(self, x: Vector, v: Vector, f_x: Optional[float] = None, g_x: Optional[Vector] = None) -> float:
        return continuous_lyapunov(self, x, v, self.f_star, f_x, g_x)


def discrete_lyapunov(mon: LyapunovMonitor, x: Vector, v: Vector, f_star: float, f_x: Optional[float] = None) -> float:
    """f(x) - f* + beta/(2 alpha) |v|^2 - beta^2/(2(1+beta)) <H v, v>, H the Hessian at the reference."""
    alpha, beta = mon.params.alpha, mon.params.beta
    if alpha is None:
        raise ValueError("discrete Lyapunov function needs a step size")
    if f_x is None:
        f_x = mon.objective.value(x)
    out = f_x - f_star
    if beta != 0.0:
        vv = float(np.dot(v, v))
        hvv = float(np.dot(mon.hess_vec_at_ref(v), v))
        out += beta / (2.0 * alpha) * vv - beta * beta / (2.0 * (1.0 + beta)) * hvv
    return out


def continuous_lyapunov(
    mon: LyapunovMonitor,
    x: Vector,
    v: Vector,
    f_star: float,
    f_x: Optional[float] = None,
    g_x: Optional[Vector] = None,
) -> float:
    """f(x) - f* + gamma/(gamma^2 + 2L') <grad f(x), v> + L'/(gamma^2 + 2L') |v|^2 with L' = L + eps."""
    gamma = mon.params.gamma
    if gamma is None:
        raise ValueError("continuous Lyapunov function needs a damping parameter")
    Le = mon.bounds.L + mon.params.epsilon
    denom = gamma * gamma + 2.0 * Le
    if f_x is None:
        f_x = mon.objective.value(x)
    if g_x is None:
        g_x = mon.objective.grad(x)
    return f_x - f_star + gamma / denom * float(np.dot(g_x, v)) + Le / denom * float(np.dot(v, v))


def sandwich_window(beta: float, L: float, epsilon: float) -> float:
    """Largest step size for which the discrete Lyapunov function stays equivalent to |grad|^2 + |v|^2."""
    if beta == 0.0:
        return math.inf
    return (1.0 + beta) / ((L + epsilon) * beta)


@dataclass
class SandwichReport:
    passed: bool
    c_low: float
    c_high: float
    n_used: int
    n_degenerate: int
    ratios: list = field(default_factory=list, repr=False)


def sandwich_check(mon: LyapunovMonitor, obj: Objective, samples: Iterable[tuple[Vector, Vector]]) -> SandwichReport:
    """Tightest constants c_low <= L(x, v) / (|grad f(x)|^2 + |v|^2) <= c_high over ``samples``.

    Samples where the denominator vanishes (at a minimizer with v = 0) are
    counted as degenerate and left out of the fit.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("sandwich_check needs at least one sample")
    p = mon.params
    eps = p.epsilon if p.epsilon > 0.0 else default_epsilon(mon.bounds.L)
    if p.alpha is None or not p.alpha < sandwich_window(p.beta, mon.bounds.L, eps):
        warnings.warn("step size lies outside the sandwich window (1+beta)/((L+eps) beta)", RuntimeWarning, stacklevel=2)
    ratios = []
    degenerate = 0
    for x, v in samples:
        g = obj.grad(x)
        denom = float(np.dot(g, g) + np.dot(v, v))
        if denom == 0.0:
            degenerate += 1
            continue
        ratios.append(discrete_lyapunov(mon, x, v, mon.f_star) / denom)
    if not ratios:
        return SandwichReport(False, math.nan, math.nan, 0, degenerate, [])
    lo, hi = min(ratios), max(ratios)
    return SandwichReport(bool(0.0 < lo <= hi < math.inf), lo, hi, len(ratios), degenerate, ratios)


@dataclass
class DecayReport:
    """Outcome of :func:`decay_audit`.

    ``nonincreasing_from`` is the first sample position after which the
    sequence never increases again (``None`` if it increases at the very end).
    ``worst_ratio`` is the largest ratio L[i+1]/L[i] over positions i >= burn_in
    with L[i] > 0.
    """

    passed: bool
    n_values: int
    nonincreasing_from: Optional[int]
    worst_ratio: float
    negative_count: int
    min_value: float
    burn_in: int = BURN_IN

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DecayReport":
        return cls(**d)


def decay_audit(traj, burn_in: int = BURN_IN, floor: float = 1e-12) -> DecayReport:
    """Check nonnegativity and eventual monotone decay of recorded Lyapunov values.

    Accepts a trajectory (anything with ``.samples``) or a plain sequence of
    values. Values below ``-floor * (1 + |f|)`` count as negativity violations.
    The audit passes when there are no violations, the sequence is
    nonincreasing from ``burn_in`` on, and every ratio there is below 1.
    """
    if hasattr(traj, "samples"):
        pairs = [(s.lyapunov, s.f_val) for s in traj.samples if s.lyapunov is not None]
    else:
        pairs = [(float(val), 0.0) for val in traj]
    values = np.array([p[0] for p in pairs], dtype=float)
    fvals = np.array([p[1] for p in pairs], dtype=float)
    n = values.size
    if n == 0:
        return DecayReport(True, 0, 0, 0.0, 0, 0.0, burn_in)

    negatives = int(np.sum(values < -floor * (1.0 + np.abs(fvals))))
    ups = np.nonzero(values[1:] > values[:-1])[0]
    nonincreasing_from = 0 if ups.size == 0 else int(ups[-1]) + 1
    if nonincreasing_from >= n - 1 and ups.size:
        nonincreasing_from_opt: Optional[int] = None
    else:
        nonincreasing_from_opt = nonincreasing_from

    worst = 0.0
    for i in range(burn_in, n - 1):
        if values[i] > 0.0:
            worst = max(worst, values[i + 1] / values[i])
        elif values[i + 1] > values[i]:
            worst = math.inf

    passed = negatives == 0 and nonincreasing_from_opt is not None and nonincreasing_from_opt <= burn_in and worst < 1.0
    return DecayReport(
        passed=bool(passed),
        n_values=int(n),
        nonincreasing_from=nonincreasing_from_opt,
        worst_ratio=float(worst),
        negative_count=negatives,
        min_value=float(values.min()),
        burn_in=burn_in,
    )
