"""Asymptotic wave speed from a front trace.

Pulled fronts approach their speed only logarithmically, so the position is
fitted as x_f(t) = c t + k0 log t + k1 over a late-time window.  The model
is linear in (c, k0, k1), so plain linear least squares is exact and there
is no optimizer to initialize.
"""

from __future__ import annotations

import numpy as np
from dataclasses import dataclass

from .numerics import linear_least_squares
from .pde import FrontTrace

MIN_SAMPLES = 10
MIN_SPAN_FACTOR = 4.0


@dataclass(frozen=True)
class SpeedFit:
    """Fitted front law x_f = c t + k0 log t + k1 over window."""

    c: float
    k0: float
    k1: float
    window: tuple[float, float]
    rms_residual: float
    covariance_diag: tuple[float, float, float]
    n_samples: int


def fit_speed(trace: FrontTrace, window: tuple[float, float]) -> SpeedFit:
    """Least-squares fit of the trace against regressors (t, log t, 1)."""
    t_min, t_max = window
    if not t_min > 0:
        raise ValueError("window start must be positive (log t in the model)")
    if not t_max > t_min:
        raise ValueError("window must have positive length")
    mask = (trace.t >= t_min) & (trace.t <= t_max)
    n = int(mask.sum())
    if n < MIN_SAMPLES:
        raise ValueError(
            f"only {n} trace samples inside window [{t_min:g}, {t_max:g}]; "
            f"need at least {MIN_SAMPLES}")
    t = trace.t[mask]
    design = np.column_stack([t, np.log(t), np.ones(n)])
    fit = linear_least_squares(design, trace.x_f[mask])
    c, k0, k1 = fit.coefficients
    rms = fit.residual_norm / np.sqrt(n)
    return SpeedFit(c=float(c), k0=float(k0), k1=float(k1),
                    window=(float(t_min), float(t_max)),
                    rms_residual=float(rms),
                    covariance_diag=tuple(fit.covariance_diag),
                    n_samples=n)


def default_window(trace: FrontTrace) -> tuple[float, float]:
    """Second half of the valid trace.

    Traces produced by the simulator end where the run ended or where the
    front hit the domain guard, so the rule (t_hi/2, t_hi) with t_hi the
    last trace time realizes "late times, away from the boundary".
    """
    if len(trace) < MIN_SAMPLES:
        raise ValueError(f"trace too short ({len(trace)} samples)")
    t_hi = float(trace.t[-1])
    if not t_hi > 0:
        raise ValueError("trace has no positive times")
    t_first = float(trace.t[trace.t > 0][0]) if np.any(trace.t > 0) else t_hi
    if t_hi < MIN_SPAN_FACTOR * t_first:
        raise ValueError(
            f"trace spans less than a factor {MIN_SPAN_FACTOR:g} in t "
            f"({t_first:g} .. {t_hi:g})")
    return (0.5 * t_hi, t_hi)
