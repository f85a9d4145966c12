"""Linearized rate theory for NAG, gradient descent and the Heavy Ball flow.

Near a minimizer, each nonzero Hessian eigenvalue lam contributes the 2x2
block whose eigenvalues solve

    z^2 - (1 + beta) m z + beta m = 0,    m = 1 - alpha lam,

and tangent directions contribute the eigenvalue beta. The spectral radius
of the iteration is the largest modulus over all of these.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .core import HyperParamError, step_size_bound


@dataclass(frozen=True)
class RootPair:
    roots: tuple[complex, complex]
    modulus_max: float
    discriminant: float


@dataclass(frozen=True)
class RateCard:
    """Closed-form optimal NAG parameters together with the competing rates.

    ``rho_opt`` and ``rho_gd`` are per-iteration factors; ``rho_flow_opt``
    is the flow's exponential decay rate per unit time (``sqrt(mu)``), which
    is not bounded by 1.
    """

    mu: float
    L: float
    alpha_opt: float
    beta_opt: float
    rho_opt: float
    rho_gd: float
    alpha_gd: float
    gamma_opt: float
    rho_flow_opt: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RateCard":
        return cls(**d)


def _check_beta(beta: float):
    if not 0.0 <= beta < 1.0:
        raise HyperParamError(f"beta must lie in [0, 1), got {beta}")


def char_discriminant(mu_alpha: float, beta: float) -> float:
    return (1.0 + beta) ** 2 * mu_alpha**2 - 4.0 * beta * mu_alpha


def piecewise_modulus(mu_alpha: float, beta: float) -> float:
    """Largest root modulus from the real/complex case split of the quadratic formula."""
    D = char_discriminant(mu_alpha, beta)
    if D >= 0.0:
        return 0.5 * (1.0 + beta) * abs(mu_alpha) + 0.5 * math.sqrt(D)
    return math.sqrt(beta * abs(mu_alpha))


def char_roots(mu_alpha: float, beta: float) -> RootPair:
    _check_beta(beta)
    b = (1.0 + beta) * mu_alpha
    c = beta * mu_alpha
    D = char_discriminant(mu_alpha, beta)
    sq = cmath.sqrt(D)
    if D >= 0.0:
        # avoid cancellation in the smaller root
        big = 0.5 * (b + math.copysign(sq.real, b))
        small = c / big if big != 0.0 else 0.0
        roots = (complex(big), complex(small))
    else:
        roots = (0.5 * (b + sq), 0.5 * (b - sq))
    return RootPair(roots=roots, modulus_max=max(abs(roots[0]), abs(roots[1])), discriminant=D)


def schur_stable(mu_alpha: float, beta: float) -> bool:
    """True iff both roots lie strictly inside the unit disk (Jury conditions)."""
    _check_beta(beta)
    return (1.0 - mu_alpha > 0.0) and (1.0 + (1.0 + 2.0 * beta) * mu_alpha > 0.0) and (beta * abs(mu_alpha) < 1.0)


def spectral_radius_G(hessian_eigs: Sequence[float], alpha: float, beta: float) -> float:
    """Spectral radius of the NAG iteration restricted to the normal space."""
    eigs = np.asarray(hessian_eigs, dtype=float).ravel()
    if eigs.size == 0:
        raise ValueError("need at least one Hessian eigenvalue")
    if not alpha > 0.0:
        raise HyperParamError(f"alpha must be positive, got {alpha}")
    _check_beta(beta)
    return max(beta, max(char_roots(1.0 - alpha * lam, beta).modulus_max for lam in eigs))


def _block_moduli(lam, alpha, beta):
    ma = 1.0 - alpha * lam
    b = (1.0 + beta) * ma
    D = b * b - 4.0 * beta * ma
    real = 0.5 * np.abs(b) + 0.5 * np.sqrt(np.maximum(D, 0.0))
    return np.where(D >= 0.0, real, np.sqrt(np.abs(beta * ma)))


def nag_block_radius(hessian_eigs: Sequence[float], alpha: float, beta: float) -> float:
    """Largest root modulus over the eigenvalue blocks, without the tangent eigenvalue beta."""
    return float(np.max(_block_moduli(np.asarray(hessian_eigs, dtype=float), alpha, beta)))


def spectral_radius_grid(hessian_eigs: Sequence[float], alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Vectorised :func:`spectral_radius_G` over broadcastable ``alpha`` and ``beta`` arrays."""
    alpha, beta = np.broadcast_arrays(np.asarray(alpha, dtype=float), np.asarray(beta, dtype=float))
    out = np.array(beta, dtype=float, copy=True)
    for lam in np.asarray(hessian_eigs, dtype=float).ravel():
        out = np.maximum(out, _block_moduli(lam, alpha, beta))
    return out


def optimal_params(mu: float, L: float) -> RateCard:
    if not mu > 0.0:
        raise HyperParamError(f"mu must be positive, got {mu}")
    if mu > L:
        raise HyperParamError(f"need mu <= L, got mu={mu}, L={L}")
    s = math.sqrt(3.0 * L + mu)
    r = 2.0 * math.sqrt(mu)
    return RateCard(
        mu=float(mu),
        L=float(L),
        alpha_opt=4.0 / (3.0 * L + mu),
        beta_opt=(s - r) / (s + r),
        rho_opt=(s - r) / s,
        rho_gd=(L - mu) / (L + mu),
        alpha_gd=2.0 / (L + mu),
        gamma_opt=r,
        rho_flow_opt=math.sqrt(mu),
    )


def flow_rate(gamma: float, mu: float) -> float:
    """Exponential rate (gamma - sqrt(max(0, gamma^2 - 4 mu))) / 2 of the Heavy Ball flow."""
    if not (gamma > 0.0 and mu > 0.0):
        raise HyperParamError("gamma and mu must be positive")
    return 0.5 * (gamma - math.sqrt(max(0.0, gamma * gamma - 4.0 * mu)))


@dataclass
class GridReport:
    passed: bool
    rho_closed_form: float
    grid_min: float
    grid_argmin: tuple[float, float]
    gap: float
    coarse_gap: float
    worst_violation: float
    n_points: int
    levels: int


def grid_verify_optimality(
    mu: float, L: float, grid_alpha: int = 100, grid_beta: int = 100, levels: int = 4, tol: float = 1e-9
) -> GridReport:
    """Brute-force check that no (alpha, beta) on a grid beats the closed-form optimum.

    The first level covers beta in [0, 1) evenly; in each row alpha runs over
    the open window (0, 2(beta+1)/(L(2beta+1))) at ``grid_alpha`` interior
    points. The optimum is a sharp corner, so each further level re-grids the
    box of +-2 cells around the previous grid argmin at the same resolution.
    The eigenvalue list is {mu, L} plus 8 evenly spaced interior values.
    Every point of every level is compared against the closed form.
    """
    if grid_alpha < 50 or grid_beta < 50:
        raise ValueError("grid sizes must be at least 50")
    if levels < 1:
        raise ValueError("need at least one grid level")
    card = optimal_params(mu, L)
    eigs = np.linspace(mu, L, 10)
    rho_star = spectral_radius_G(eigs, card.alpha_opt, card.beta_opt)

    beta_lo, beta_hi = 0.0, 1.0
    frac_lo, frac_hi = 0.0, 1.0
    best = (np.inf, 0.0, 0.0)
    coarse = np.inf
    worst = -np.inf
    n_points = 0
    for level in range(levels):
        betas = beta_lo + (beta_hi - beta_lo) * np.arange(grid_beta) / grid_beta
        fracs = frac_lo + (frac_hi - frac_lo) * np.arange(1, grid_alpha + 1) / (grid_alpha + 1)
        bounds = np.array([step_size_bound(b, L) for b in betas])
        A = bounds[:, None] * fracs[None, :]
        B = np.broadcast_to(betas[:, None], A.shape)
        rho = spectral_radius_grid(eigs, A, B)
        n_points += rho.size
        worst = max(worst, float(rho_star - rho.min()))
        i, j = np.unravel_index(np.argmin(rho), rho.shape)
        if rho[i, j] < best[0]:
            best = (float(rho[i, j]), float(A[i, j]), float(B[i, j]))
        if level == 0:
            coarse = float(rho[i, j])
        db = (beta_hi - beta_lo) / grid_beta
        df = (frac_hi - frac_lo) / (grid_alpha + 1)
        beta_lo, beta_hi = max(0.0, betas[i] - 2 * db), min(1.0, betas[i] + 2 * db)
        frac_lo, frac_hi = max(0.0, fracs[j] - 2 * df), min(1.0, fracs[j] + 2 * df)

    return GridReport(
        passed=bool(worst <= tol),
        rho_closed_form=card.rho_opt,
        grid_min=best[0],
        grid_argmin=(best[1], best[2]),
        gap=best[0] - card.rho_opt,
        coarse_gap=coarse - card.rho_opt,
        worst_violation=worst,
        n_points=n_points,
        levels=levels,
    )
