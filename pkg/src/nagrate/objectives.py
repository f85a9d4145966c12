"""Test objectives: diagonal quadratics and the sphere-product Morse-Bott function.

The sphere-product function on (u, v) in R^k x R^m is

    f(u, v) = 1/2 u^T diag(lam_1..lam_k) u + lam_{k+1}/8 (||v||^2 - 1)^2

whose global minimizers form the manifold {u = 0, ||v|| = 1}. Points are
stored as the concatenation x = (u, v).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import Objective, SpectralBounds, Vector


class QuadraticObjective(Objective):
    """f(x) = 1/2 sum_i eigs_i x_i^2 with unique minimizer 0."""

    def __init__(self, eigs: Sequence[float]):
        eigs = np.asarray(eigs, dtype=float).ravel()
        if eigs.size == 0 or not np.all(eigs > 0.0):
            raise ValueError("quadratic eigenvalues must be a nonempty list of positive numbers")
        self.eigs = eigs
        self.dimension = eigs.size
        self.tangent_dimension = 0
        self.reference_minimizer = np.zeros(eigs.size)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * float(np.dot(self.eigs * x, x))

    def grad(self, x):
        return self.eigs * np.asarray(x, dtype=float)

    def hess_vec(self, x, w):
        return self.eigs * np.asarray(w, dtype=float)

    def spectral_bounds(self) -> SpectralBounds:
        return SpectralBounds(mu=float(self.eigs.min()), L=float(self.eigs.max()))

    def normal_spectrum(self) -> np.ndarray:
        return self.eigs.copy()

    def project_to_minimizers(self, x):
        return np.zeros(self.dimension)

    def distance_to_minimizers(self, x) -> float:
        return float(np.linalg.norm(x))


class SphereProductObjective(Objective):
    """Nonconvex objective whose minimizers form a product of a point and a sphere.

    Parameters
    ----------
    k : int
        Size of the strongly curved block ``u``.
    m : int
        Size of the sphere block ``v`` (at least 2).
    lambdas : sequence of float
        ``k + 1`` positive curvatures; sorted ascending on construction.
    """

    def __init__(self, k: int, m: int, lambdas: Sequence[float]):
        if k < 1:
            raise ValueError(f"k must be a positive integer, got {k}")
        if m < 2:
            raise ValueError(f"m must be at least 2, got {m}")
        lambdas = np.sort(np.asarray(lambdas, dtype=float).ravel())
        if lambdas.size != k + 1:
            raise ValueError(f"expected {k + 1} curvatures, got {lambdas.size}")
        if not lambdas[0] > 0.0:
            raise ValueError("curvatures must be positive")
        self.k = int(k)
        self.m = int(m)
        self.lambdas = lambdas
        self.diag = lambdas[:k]
        self.lam_top = float(lambdas[k])
        self.dimension = self.k + self.m
        self.tangent_dimension = self.m - 1
        ref = np.zeros(self.dimension)
        ref[self.k] = 1.0
        self.reference_minimizer = ref

    @classmethod
    def indexed(cls, k: int, m: int = 10) -> "SphereProductObjective":
        """Curvatures lam_i = i for i = 1..k+1."""
        return cls(k, m, np.arange(1, k + 2, dtype=float))

    def split(self, x: Vector):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(f"expected a point of dimension {self.dimension}, got shape {x.shape}")
        return x[: self.k], x[self.k :]

    def join(self, u: Vector, v: Vector) -> Vector:
        return np.concatenate([np.asarray(u, dtype=float), np.asarray(v, dtype=float)])

    def value(self, x):
        return sphere_eval(self, *self.split(x))

    def grad(self, x):
        return sphere_grad(self, *self.split(x))

    def hess_vec(self, x, w):
        u, v = self.split(x)
        return sphere_hess_vec(self, u, v, w)

    def spectral_bounds(self) -> SpectralBounds:
        return spectral_bounds_of(self)

    def normal_spectrum(self) -> np.ndarray:
        """Nonzero Hessian eigenvalues at any minimizer."""
        return self.lambdas.copy()

    def project_to_minimizers(self, x):
        u, v = self.split(x)
        r = np.linalg.norm(v)
        if r == 0.0:
            return self.reference_minimizer.copy()
        return self.join(np.zeros(self.k), v / r)

    def distance_to_minimizers(self, x) -> float:
        return manifold_distance(self, *self.split(x))[0]


def _check_uv(obj: SphereProductObjective, u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != (obj.k,) or v.shape != (obj.m,):
        raise ValueError(f"expected u in R^{obj.k} and v in R^{obj.m}, got shapes {u.shape} and {v.shape}")
    return u, v


def sphere_eval(obj: SphereProductObjective, u, v) -> float:
    u, v = _check_uv(obj, u, v)
    s = float(np.dot(v, v)) - 1.0
    return 0.5 * float(np.dot(obj.diag * u, u)) + obj.lam_top / 8.0 * s * s


def sphere_grad(obj: SphereProductObjective, u, v) -> Vector:
    u, v = _check_uv(obj, u, v)
    s = float(np.dot(v, v)) - 1.0
    return np.concatenate([obj.diag * u, 0.5 * obj.lam_top * s * v])


def sphere_hess_vec(obj: SphereProductObjective, u, v, w) -> Vector:
    u, v = _check_uv(obj, u, v)
    w = np.asarray(w, dtype=float)
    if w.shape != (obj.dimension,):
        raise ValueError(f"direction must have dimension {obj.dimension}, got shape {w.shape}")
    wu, wv = w[: obj.k], w[obj.k :]
    s = float(np.dot(v, v)) - 1.0
    return np.concatenate([obj.diag * wu, obj.lam_top * (0.5 * s * wv + float(np.dot(v, wv)) * v)])


def manifold_distance(obj: SphereProductObjective, u, v) -> tuple[float, bool]:
    """Distance to {u = 0, ||v|| = 1} and whether the nearest point is unique.

    At v = 0 every unit vector is equally close, so the flag is False there.
    """
    u, v = _check_uv(obj, u, v)
    r = float(np.linalg.norm(v))
    return float(np.sqrt(np.dot(u, u) + (r - 1.0) ** 2)), r > 0.0


def spectral_bounds_of(obj: SphereProductObjective) -> SpectralBounds:
    return SpectralBounds(mu=float(obj.lambdas[0]), L=float(obj.lambdas[-1]))


def near_manifold_init(
    obj: SphereProductObjective, eps_u: float, eps_v: float, seed: int, rng: Optional[np.random.Generator] = None
) -> Vector:
    """Random start u0 = eps_u xi_u, v0 = (1 + eps_v) xi_v / ||xi_v|| with Gaussian xi.

    Deterministic for a given ``seed`` (numpy's PCG64 generator).
    """
    if not (eps_u > 0.0 and eps_v > 0.0):
        raise ValueError("eps_u and eps_v must be positive")
    if rng is None:
        rng = np.random.default_rng(seed)
    xi_u = rng.standard_normal(obj.k)
    xi_v = rng.standard_normal(obj.m)
    while np.linalg.norm(xi_v) < 1e-12:
        xi_v = rng.standard_normal(obj.m)
    return obj.join(eps_u * xi_u, (1.0 + eps_v) * xi_v / np.linalg.norm(xi_v))


def gaussian_init(obj: QuadraticObjective, scale: float, seed: int) -> Vector:
    """Start point scale * xi around the quadratic's minimizer."""
    if not scale > 0.0:
        raise ValueError("scale must be positive")
    rng = np.random.default_rng(seed)
    return scale * rng.standard_normal(obj.dimension)
