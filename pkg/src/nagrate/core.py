"""Shared types and the objective-function contract."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.typing import NDArray

Vector = NDArray[np.float64]


class HyperParamError(ValueError):
    """Raised when hyperparameters fall outside their admissible domain."""


class NonFiniteGradientError(ArithmeticError):
    """Raised when an iteration produces a non-finite gradient."""


def default_epsilon(L: float) -> float:
    return 1e-6 * L


def step_size_bound(beta: float, L: float, epsilon: float = 0.0) -> float:
    """Upper end of the admissible step-size window 2(beta+1) / ((L+eps)(2 beta+1))."""
    return 2.0 * (beta + 1.0) / ((L + epsilon) * (2.0 * beta + 1.0))


def validate_hyperparams(alpha: float, beta: float, L: float, epsilon: Optional[float] = None) -> bool:
    """Return True iff ``0 < alpha < 2(beta+1)/((L+epsilon)(2beta+1))``.

    A malformed ``beta`` or ``L`` is an error rather than an invalid step size,
    so those raise :class:`HyperParamError` instead of returning False.
    """
    if not 0.0 <= beta < 1.0:
        raise HyperParamError(f"beta must lie in [0, 1), got {beta}")
    if not L > 0.0:
        raise HyperParamError(f"L must be positive, got {L}")
    if epsilon is None:
        epsilon = default_epsilon(L)
    if epsilon < 0.0:
        raise HyperParamError(f"epsilon must be nonnegative, got {epsilon}")
    return 0.0 < alpha < step_size_bound(beta, L, epsilon)


@dataclass(frozen=True)
class HyperParams:
    """Step size and momentum for the discrete methods, damping for the flow.

    Fields that a given method does not use may be left as ``None``.
    """

    alpha: Optional[float] = None
    beta: float = 0.0
    gamma: Optional[float] = None
    epsilon: float = 0.0

    def __post_init__(self):
        if self.alpha is not None and not self.alpha > 0.0:
            raise HyperParamError(f"alpha must be positive, got {self.alpha}")
        if not 0.0 <= self.beta < 1.0:
            raise HyperParamError(f"beta must lie in [0, 1), got {self.beta}")
        if self.gamma is not None and not self.gamma > 0.0:
            raise HyperParamError(f"gamma must be positive, got {self.gamma}")
        if not self.epsilon >= 0.0:
            raise HyperParamError(f"epsilon must be nonnegative, got {self.epsilon}")


@dataclass(frozen=True)
class SpectralBounds:
    """Extremal nonzero Hessian eigenvalues at a minimizer, plus an optional PL modulus."""

    mu: float
    L: float
    nu: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.mu <= self.L:
            raise HyperParamError(f"need 0 < mu <= L, got mu={self.mu}, L={self.L}")
        if self.nu is not None and not self.nu > 0.0:
            raise HyperParamError(f"nu must be positive, got {self.nu}")


@dataclass(frozen=True)
class IterateState:
    x: Vector
    x_prev: Vector
    n: int = 1

    @property
    def velocity(self) -> Vector:
        return self.x - self.x_prev


@dataclass(frozen=True)
class TrajectorySample:
    """One record of a discrete run (``index`` = n) or of a flow (``index`` = t).

    ``step_norm`` is ||x^{n+1} - x^n|| for iterations and ||x'(t)|| for flows.
    """

    index: float
    f_val: float
    grad_norm: float
    step_norm: float
    lyapunov: Optional[float] = None


class Objective:
    """Smooth objective with gradient and Hessian-vector products.

    Subclasses implement :meth:`value` and :meth:`grad`. :meth:`hess_vec`
    falls back to central differences of the gradient. Implementations must
    be stateless so that independent runs can share one instance.
    """

    dimension: int
    reference_minimizer: Optional[Vector] = None

    def value(self, x: Vector) -> float:
        raise NotImplementedError

    def grad(self, x: Vector) -> Vector:
        raise NotImplementedError

    def hess_vec(self, x: Vector, w: Vector) -> Vector:
        return hess_vec_fd(self, x, w)

    @property
    def has_analytic_hess_vec(self) -> bool:
        return type(self).hess_vec is not Objective.hess_vec

    def project_to_minimizers(self, x: Vector) -> Optional[Vector]:
        """Nearest known minimizer to ``x``, or ``None`` when unknown."""
        return self.reference_minimizer


class FunctionObjective(Objective):
    """Adapter turning plain callables into an :class:`Objective`."""

    def __init__(
        self,
        dimension: int,
        value: Callable[[Vector], float],
        grad: Callable[[Vector], Vector],
        hess_vec: Optional[Callable[[Vector, Vector], Vector]] = None,
        reference_minimizer: Optional[Vector] = None,
    ):
        if dimension < 1:
            raise ValueError("dimension must be a positive integer")
        self.dimension = int(dimension)
        self._value = value
        self._grad = grad
        self._hess_vec = hess_vec
        if reference_minimizer is not None:
            reference_minimizer = np.asarray(reference_minimizer, dtype=float)
        self.reference_minimizer = reference_minimizer

    def value(self, x):
        return float(self._value(x))

    def grad(self, x):
        return np.asarray(self._grad(x), dtype=float)

    def hess_vec(self, x, w):
        if self._hess_vec is None:
            return hess_vec_fd(self, x, w)
        return np.asarray(self._hess_vec(x, w), dtype=float)

    @property
    def has_analytic_hess_vec(self) -> bool:
        return self._hess_vec is not None


def default_fd_step(x: Vector) -> float:
    return 1e-5 * (1.0 + float(np.linalg.norm(x)))


def hess_vec_fd(obj: Objective, x: Vector, w: Vector, h: Optional[float] = None) -> Vector:
    """Central difference (grad(x + h w) - grad(x - h w)) / (2h)."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if h is None:
        h = default_fd_step(x)
    if not h > 0.0:
        raise ValueError(f"finite-difference step must be positive, got {h}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w))):
        raise ValueError("hess_vec_fd needs finite x and w")
    g_plus = obj.grad(x + h * w)
    g_minus = obj.grad(x - h * w)
    out = (g_plus - g_minus) / (2.0 * h)
    if not np.all(np.isfinite(out)):
        raise NonFiniteGradientError("non-finite gradient in finite-difference Hessian-vector product")
    return out


def grad_fd(obj: Objective, x: Vector, h: float = 1e-5) -> Vector:
    """Central-difference gradient of ``obj.value``, coordinate by coordinate."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    e = np.zeros_like(x)
    for i in range(x.size):
        e[i] = h
        g[i] = (obj.value(x + e) - obj.value(x - e)) / (2.0 * h)
        e[i] = 0.0
    return g


def relative_error(a: Vector, b: Vector) -> float:
    """||a - b|| / max(||a||, ||b||), zero when both vanish."""
    scale = max(float(np.linalg.norm(a)), float(np.linalg.norm(b)))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b))) / scale


def is_finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)
