"""Closed-form quantities of the invasion model.

The model couples an invading cell density u (diffusing, logistic growth,
both inhibited by the residents) to a resident density v that is only
destroyed, at nondimensional rate gamma:

    u_t = ((1 - v) u_x)_x + u (1 - u - v),      v_t = -gamma u v.

Everything in this module is a pure function of its arguments: the linear
dispersion relation at the front, the eigenstructure of the travelling-wave
equilibria, the spiral/monotone threshold, and the logarithmic wave-speed
correction at large death rate.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ModelParams:
    """Death rate gamma and far-field resident density v_inf (= initial v)."""

    gamma: float
    v_inf: float

    def __post_init__(self) -> None:
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not 0.0 <= self.v_inf < 1.0:
            raise ValueError(
                f"v_inf must lie in [0, 1) (degenerate diffusion at 1), got {self.v_inf}"
            )


@dataclass(frozen=True)
class RearEigenData:
    """Eigenstructure at the invaded state (U, V, W) = (1, 0, 0).

    lambda1 = gamma/c with the V-axis direction, lambda2 > 0 > lambda3 from
    lambda^2 + c*lambda - 1 = 0 with eigenvectors (1, 0, lambda).
    """

    lambda1: float
    lambda2: float
    lambda3: float
    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray


@dataclass(frozen=True)
class FrontEigenData:
    """Eigenstructure at a front equilibrium (0, V_inf, 0).

    cee is the ratio c / (2 (1 - V_inf)); the nonzero eigenvalues are
    -cee +- sqrt(cee^2 - 1) and form a complex pair when cee < 1 (the
    spiral regime).  lambda1p is identically zero (the axis of equilibria).
    """

    cee: float
    lambda1p: float
    lambda2p: complex
    lambda3p: complex
    e2p: np.ndarray
    e3p: np.ndarray
    complex_pair: bool


@dataclass(frozen=True)
class VCritical:
    """Spiral/monotone threshold 1 - c/2, clamped to 0 for c > 2."""

    value: float
    clamped: bool


@dataclass(frozen=True)
class DeltaPrediction:
    """Wave-speed correction delta = 2 - c predicted at large gamma.

    one_term = pi^2 / (log gamma)^2; two_term adds the prefactor-dependent
    2 pi^2 log(A_I/A_0) / (log gamma)^3; unexpanded keeps the combined
    logarithm pi^2 [log((A_0/A_I) gamma)]^-2.
    """

    one_term: float
    two_term: float
    unexpanded: float


def dispersion_speed(a: float, v0: float) -> float:
    """Front speed selected by an exponentially decaying profile exp(-a x).

    Returns 2 (1 - v0) for a >= 1 and (a + 1/a)(1 - v0) for a < 1.
    """
    if not a > 0:
        raise ValueError(f"decay rate a must be positive, got {a}")
    if not 0.0 <= v0 < 1.0:
        raise ValueError(f"v0 must lie in [0, 1), got {v0}")
    if a >= 1.0:
        return 2.0 * (1.0 - v0)
    return (a + 1.0 / a) * (1.0 - v0)


def a_star(v0: float) -> float:
    """Critical decay rate where the dispersion speed equals 2.

    Smaller root of (a + 1/a)(1 - v0) = 2.  Decay rates a < a_star give
    dispersion speeds above 2, and such initial data keep the dispersion
    speed for every death rate; for a > a_star the compact-support branch
    takes over once gamma is large enough.  (Printed statements of the
    inequality vary in sign; this convention is the one consistent with
    the monotonicity of dispersion_speed in a.)
    """
    if not 0.0 <= v0 < 1.0:
        raise ValueError(f"v0 must lie in [0, 1), got {v0}")
    r = 1.0 / (1.0 - v0)
    return r - math.sqrt(r * r - 1.0)


def eig_rear(c: float, gamma: float) -> RearEigenData:
    """Eigenvalues/eigenvectors at the rear equilibrium (1, 0, 0)."""
    if not c > 0:
        raise ValueError(f"wave speed c must be positive, got {c}")
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    lam1 = gamma / c
    s = math.sqrt(c * c + 4.0)
    lam2 = 0.5 * (-c + s)
    lam3 = 0.5 * (-c - s)
    return RearEigenData(
        lambda1=lam1,
        lambda2=lam2,
        lambda3=lam3,
        e1=np.array([0.0, 1.0, 0.0]),
        e2=np.array([1.0, 0.0, lam2]),
        e3=np.array([1.0, 0.0, lam3]),
    )


def eig_front(c: float, v_inf: float, gamma: float) -> FrontEigenData:
    """Eigenvalues/eigenvectors at a front equilibrium (0, V_inf, 0).

    The pair is complex (spiral regime) when cee = c/(2(1-V_inf)) < 1.
    Eigenvectors are (lambda, gamma V_inf / c, lambda^2).
    """
    if not c > 0:
        raise ValueError(f"wave speed c must be positive, got {c}")
    if not 0.0 <= v_inf < 1.0:
        raise ValueError(
            f"V_inf must lie in [0, 1) (degenerate diffusion at 1), got {v_inf}"
        )
    cee = c / (2.0 * (1.0 - v_inf))
    disc = cee * cee - 1.0
    if disc >= 0.0:
        s = math.sqrt(disc)
        lam2: complex = -cee + s
        lam3: complex = -cee - s
        complex_pair = False
    else:
        s = math.sqrt(-disc)
        lam2 = complex(-cee, s)
        lam3 = complex(-cee, -s)
        complex_pair = True
    vmid = gamma * v_inf / c
    e2 = np.array([lam2, vmid, lam2 * lam2])
    e3 = np.array([lam3, vmid, lam3 * lam3])
    return FrontEigenData(
        cee=cee,
        lambda1p=0.0,
        lambda2p=lam2,
        lambda3p=lam3,
        e2p=e2,
        e3p=e3,
        complex_pair=complex_pair,
    )


def v_critical(c: float) -> VCritical:
    """Resident density at which the front eigenvalues switch complex/real.

    Equals 1 - c/2 for 0 < c <= 2.  For c > 2 no spiral regime exists and
    the value is clamped to 0 with the flag set.
    """
    if not c > 0:
        raise ValueError(f"wave speed c must be positive, got {c}")
    if c > 2.0:
        return VCritical(value=0.0, clamped=True)
    return VCritical(value=1.0 - 0.5 * c, clamped=False)


def lambda_inner(v_inf: float) -> float:
    """Fast decay rate of the front layer at critical speed c = 2.

    Closed form -(1/(1-V_inf)) (1 + sqrt(1 - (1-V_inf)^2)); identical to
    the more negative front eigenvalue evaluated at c = 2.
    """
    if not 0.0 < v_inf < 1.0:
        raise ValueError(f"V_inf must lie in (0, 1), got {v_inf}")
    q = 1.0 - v_inf
    return -(1.0 / q) * (1.0 + math.sqrt(1.0 - q * q))


def predict_delta(gamma: float, a0: float, a_inner: float) -> DeltaPrediction:
    """Predicted wave-speed correction delta = 2 - c at large gamma.

    Requires gamma > 1 so log gamma is positive, and the two tail
    prefactors a0 (outer) and a_inner (front layer).
    """
    if not gamma > 1.0:
        raise ValueError(f"gamma must exceed 1, got {gamma}")
    if not (a0 > 0 and a_inner > 0):
        raise ValueError("tail prefactors must be positive")
    lg = math.log(gamma)
    one = math.pi ** 2 / lg ** 2
    two = one + 2.0 * math.pi ** 2 * math.log(a_inner / a0) / lg ** 3
    unexpanded = math.pi ** 2 / math.log(gamma * a0 / a_inner) ** 2
    return DeltaPrediction(one_term=one, two_term=two, unexpanded=unexpanded)
