"""Estimators for fringe visibility and for the step in visibility curves.

Fringe counts at displacement x follow a + b*cos(k*x + phase).  Rather than
fitting the phase nonlinearly, the fit linearizes to
a + c*cos(k*x) + s*sin(k*x) and reports V = sqrt(c^2 + s^2)/a.  Counts are
treated as Poisson, or as binomial when the per point trial number is
supplied; a fixed trial budget makes the binomial correction matter
wherever the fringe approaches zero or every trial clicks.  Parameter
covariances are scaled by the reduced chi square so that exactly
reproducible synthetic data yields zero error bars.

A visibility that drops from one plateau to another as the scan variable
crosses a threshold is fit with a normal CDF step; jittered arrival times
produce exactly that shape with width c_eff*jitter_sigma*sqrt(2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize, special

__all__ = [
    "FitFailure",
    "KinkCurve",
    "KinkFit",
    "KinkPoint",
    "VisibilityEstimate",
    "fit_kink",
    "fit_visibility",
    "kink_amplitude",
    "kink_model",
    "visibility_minmax",
]

MIN_FIT_POINTS = 4
SE_FLOOR = 1.0e-4
FLAT_SIGMA_FACTOR = 4.0


class FitFailure(Exception):
    """A fit that cannot produce a meaningful estimate.

    reason is a short machine readable tag; info carries diagnostic
    numbers (for example the flat level when no step is present).
    """

    def __init__(self, reason: str, message: str, **info: float) -> None:
        super().__init__(message)
        self.reason = reason
        self.info: dict[str, float] = dict(info)


@dataclass(frozen=True)
class VisibilityEstimate:
    """Fringe contrast from a sinusoid fit to one counts curve."""

    value: float
    stderr: float
    offset: float
    amplitude: float
    phase: float
    chi2: float
    dof: int


def _as_array(values: Sequence[float], name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def fit_visibility(
    delta_r: Sequence[float],
    counts: Sequence[float],
    k: float,
    n_trials: Sequence[float] | float | None = None,
) -> VisibilityEstimate:
    """Weighted sinusoid fit; returns contrast with a propagated error.

    n_trials, when given (scalar or per point), switches the count
    variance model from Poisson to binomial with that denominator.
    """
    x = _as_array(delta_r, "delta_r")
    y = _as_array(counts, "counts")
    if x.size != y.size:
        raise ValueError("delta_r and counts must have equal length")
    if x.size < MIN_FIT_POINTS:
        raise FitFailure(
            "too_few_points", f"need at least {MIN_FIT_POINTS} points, got {x.size}"
        )
    if np.any(y < 0):
        raise ValueError("counts must be nonnegative")
    if not math.isfinite(k) or k <= 0:
        raise ValueError("k must be a positive wavenumber")
    trials = None
    if n_trials is not None:
        trials = np.broadcast_to(
            np.asarray(n_trials, dtype=float), y.shape
        ).copy()
        if np.any(trials <= 0):
            raise ValueError("n_trials must be positive")
        if np.any(y > trials):
            raise ValueError("counts cannot exceed n_trials")

    design = np.column_stack([np.ones_like(x), np.cos(k * x), np.sin(k * x)])

    def model_sigma(mu: np.ndarray) -> np.ndarray:
        var = mu.copy()
        if trials is not None:
            var = mu * (1.0 - np.clip(mu / trials, 0.0, 1.0))
        return np.sqrt(np.maximum(var, 1.0))

    # Iterated weights: seed sigma from observed counts, then reweight
    # from the fitted model.  Observed-count weights alone understate
    # errors wherever the fringe dips to zero counts.
    sigma = model_sigma(y)
    params = cov_unscaled = None
    for _ in range(3):
        w = design / sigma[:, None]
        normal = w.T @ w
        try:
            cov_unscaled = np.linalg.inv(normal)
        except np.linalg.LinAlgError:
            raise FitFailure(
                "singular_design", "scan points do not constrain the sinusoid"
            ) from None
        params = cov_unscaled @ (w.T @ (y / sigma))
        sigma = model_sigma(np.maximum(design @ params, 0.0))
    a, c, s = (float(p) for p in params)

    resid = (y - design @ params) / sigma
    chi2 = float(resid @ resid)
    dof = x.size - 3
    cov = cov_unscaled * (chi2 / dof if dof > 0 else 1.0)

    if a <= 0:
        raise FitFailure("nonpositive_offset", "fitted mean rate is not positive", offset=a)
    b = math.hypot(c, s)
    value = b / a
    if b > 0:
        grad = np.array([-b / a**2, c / (a * b), s / (a * b)])
        var = float(grad @ cov @ grad)
    else:
        var = float(cov[1, 1] + cov[2, 2]) / a**2
    return VisibilityEstimate(
        value=value,
        stderr=math.sqrt(max(var, 0.0)),
        offset=a,
        amplitude=b,
        phase=math.atan2(-s, c),
        chi2=chi2,
        dof=dof,
    )


def visibility_minmax(counts: Sequence[float]) -> float:
    """Crude (max-min)/(max+min) contrast; no error bar, no model."""
    y = _as_array(counts, "counts")
    hi, lo = float(y.max()), float(y.min())
    if hi + lo <= 0:
        raise FitFailure("empty_curve", "counts sum to zero")
    return (hi - lo) / (hi + lo)


@dataclass(frozen=True)
class KinkPoint:
    """Visibility measured at one value of the scanned path offset."""

    k_value: float
    visibility: float
    stderr: float


@dataclass(frozen=True)
class KinkCurve:
    points: tuple[KinkPoint, ...]

    @property
    def k_values(self) -> np.ndarray:
        return np.array([p.k_value for p in self.points])

    @property
    def visibilities(self) -> np.ndarray:
        return np.array([p.visibility for p in self.points])

    @property
    def stderrs(self) -> np.ndarray:
        return np.array([p.stderr for p in self.points])


@dataclass(frozen=True)
class KinkFit:
    """Normal CDF step fit: plateaus, threshold location, transition width."""

    center: float
    center_se: float
    width: float
    width_se: float
    v_high: float
    v_low: float
    chi2: float
    dof: int


def kink_model(
    k_values: np.ndarray | float,
    v_high: float,
    v_low: float,
    center: float,
    width: float,
) -> np.ndarray | float:
    """Visibility dropping from v_high to v_low across center, width w."""
    z = (np.asarray(k_values, dtype=float) - center) / width
    return v_high - (v_high - v_low) * 0.5 * (1.0 + special.erf(z / math.sqrt(2.0)))


def _weighted_mean(values: np.ndarray, errs: np.ndarray) -> tuple[float, float]:
    w = 1.0 / np.maximum(errs, SE_FLOOR) ** 2
    mean = float(np.sum(w * values) / np.sum(w))
    return mean, float(1.0 / math.sqrt(np.sum(w)))


def fit_kink(curve: KinkCurve) -> KinkFit:
    """Fit the step; refuses flat curves rather than inventing a threshold."""
    x = curve.k_values
    y = curve.visibilities
    se = np.maximum(curve.stderrs, SE_FLOOR)
    if x.size < MIN_FIT_POINTS:
        raise FitFailure(
            "too_few_points", f"need at least {MIN_FIT_POINTS} points, got {x.size}"
        )
    if np.any(np.diff(x) <= 0):
        raise ValueError("k_values must be strictly increasing")

    flat_level, _ = _weighted_mean(y, se)
    chi2_flat = float(np.sum(((y - flat_level) / se) ** 2))
    dof_flat = x.size - 1
    if chi2_flat <= dof_flat + FLAT_SIGMA_FACTOR * math.sqrt(2.0 * dof_flat):
        raise FitFailure(
            "no_kink",
            "curve is statistically flat; no step to locate",
            flat_level=flat_level,
            chi2=chi2_flat,
        )

    span = float(x[-1] - x[0])
    v_hi0 = float(np.max(y))
    v_lo0 = float(np.min(y))
    center0 = float(x[np.argmin(np.abs(y - 0.5 * (v_hi0 + v_lo0)))])
    p0 = [v_hi0, v_lo0, center0, span / 10.0]
    bounds = (
        [0.0, 0.0, float(x[0]) - span, span * 1.0e-9],
        [1.5, 1.5, float(x[-1]) + span, span * 10.0],
    )
    try:
        params, cov = optimize.curve_fit(
            kink_model, x, y, p0=p0, sigma=se, bounds=bounds, maxfev=20000
        )
    except (RuntimeError, optimize.OptimizeWarning) as exc:
        raise FitFailure("kink_fit_failed", f"step fit did not converge: {exc}") from exc
    v_high, v_low, center, width = (float(p) for p in params)
    if not np.all(np.isfinite(cov)):
        raise FitFailure("kink_fit_failed", "step fit covariance is not finite")
    resid = (y - kink_model(x, *params)) / se
    return KinkFit(
        center=center,
        center_se=float(math.sqrt(max(cov[2, 2], 0.0))),
        width=width,
        width_se=float(math.sqrt(max(cov[3, 3], 0.0))),
        v_high=v_high,
        v_low=v_low,
        chi2=float(resid @ resid),
        dof=x.size - 4,
    )


def kink_amplitude(
    curve: KinkCurve, center: float, exclusion_halfwidth: float
) -> tuple[float, float]:
    """Plateau difference (left minus right) avoiding the transition band.

    Returns (amplitude, stderr).  Points within exclusion_halfwidth of
    center are dropped; both plateaus must keep at least one point.
    """
    x = curve.k_values
    y = curve.visibilities
    se = curve.stderrs
    left = x <= center - exclusion_halfwidth
    right = x >= center + exclusion_halfwidth
    if not (left.any() and right.any()):
        raise FitFailure(
            "plateaus_unsampled",
            "exclusion band leaves no points on one side of the step",
        )
    mean_l, se_l = _weighted_mean(y[left], se[left])
    mean_r, se_r = _weighted_mean(y[right], se[right])
    return mean_l - mean_r, math.hypot(se_l, se_r)
