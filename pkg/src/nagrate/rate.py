"""Empirical convergence rates from trajectories via log-linear least squares."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

MIN_POINTS = 30
FLOOR_REL = 1e-15
BURN_IN_DROP = 100.0


class RateFitError(ValueError):
    pass


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of log(step norm) against the index.

    Discrete fits fill ``rho_hat`` (factor per iteration); flow fits fill
    ``sigma_hat`` (decay exponent per unit time). ``window`` holds the first
    and last abscissa used.
    """

    rho_hat: Optional[float]
    sigma_hat: Optional[float]
    slope: float
    intercept: float
    window: tuple[float, float]
    r_squared: float
    n_points: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RateFit":
        d = dict(d)
        d["window"] = tuple(d["window"])
        return cls(**d)


def _tail_window(t: np.ndarray, y: np.ndarray, floor: float, tail_fraction: float):
    if not 0.0 < tail_fraction <= 1.0:
        raise RateFitError(f"tail_fraction must lie in (0, 1], got {tail_fraction}")
    if y.size == 0 or not np.any(y > 0.0):
        raise RateFitError("all step norms are zero")
    # burn-in: skip everything before the first 100x drop from the peak
    peak = int(np.argmax(y))
    dropped = np.nonzero(y[peak:] <= y[peak] / BURN_IN_DROP)[0]
    burn = peak + int(dropped[0]) if dropped.size else y.size
    start = max(int(math.floor((1.0 - tail_fraction) * y.size)), burn)
    keep = np.arange(y.size) >= start
    keep &= y > floor
    if np.count_nonzero(keep) < MIN_POINTS:
        raise RateFitError(
            f"only {int(np.count_nonzero(keep))} usable tail samples (need {MIN_POINTS})"
        )
    return t[keep], y[keep]


def _least_squares(t: np.ndarray, logy: np.ndarray):
    tc = t - t.mean()
    slope = float(np.dot(tc, logy - logy.mean()) / np.dot(tc, tc))
    intercept = float(logy.mean() - slope * t.mean())
    resid = logy - (intercept + slope * t)
    ss_tot = float(np.dot(logy - logy.mean(), logy - logy.mean()))
    r2 = 1.0 - float(np.dot(resid, resid)) / ss_tot if ss_tot > 0.0 else 1.0
    return slope, intercept, max(0.0, r2)


def _fit(traj, tail_fraction: float):
    t = traj.indices
    y = traj.step_norms
    floor = FLOOR_REL * (1.0 + traj.start_norm)
    t, y = _tail_window(t, y, floor, tail_fraction)
    slope, intercept, r2 = _least_squares(t, np.log(y))
    return slope, intercept, r2, (float(t[0]), float(t[-1])), int(t.size)


def fit_linear_rate(traj, tail_fraction: float = 0.5) -> RateFit:
    """Per-iteration factor exp(slope) of log |x^{n+1} - x^n| over the tail window.

    The window is the last ``tail_fraction`` of the samples, but never starts
    before the step norm has dropped 100x below its peak. Samples below
    1e-15 (1 + |x^1|) are rounding noise and are dropped.
    """
    slope, intercept, r2, window, n = _fit(traj, tail_fraction)
    return RateFit(math.exp(slope), None, slope, intercept, window, r2, n)


def fit_exp_rate(traj, tail_fraction: float = 0.5) -> RateFit:
    """Decay exponent -slope of log |x'(t)| against t over the tail window."""
    slope, intercept, r2, window, n = _fit(traj, tail_fraction)
    return RateFit(None, -slope, slope, intercept, window, r2, n)
