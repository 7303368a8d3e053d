"""Large-death-rate asymptotics of the wave speed and interstitial gap.

At large gamma the wave is a critical planar front (speed 2) perturbed in a
front layer where the residents live.  Matching the two regions through an
oscillatory intermediate zone fixes the speed correction delta = 2 - c via
two tail prefactors:

  - a0: prefactor of the outer critical front, U0 ~ a0 (z - z0) e^{-(z-z0)};
  - a_inner(V_inf): the analogous rear prefactor of the front-layer problem.

Both are limits of the translation-invariant functional
ell = U/(U+W) + log|U+W| along the respective orbit tails; the code detects
an ell plateau with a Cauchy criterion anchored at a far-tail event, which
is robust to the eventual round-off noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import DeltaPrediction, lambda_inner, predict_delta
from .numerics import EventSpec, IvpProblem, integrate_adaptive
from .tw import BranchPoint

Z_BUDGET = 80.0
PLATEAU_TOL = 1e-8
DEFAULT_EPS = 1e-6
DEFAULT_RTOL = 1e-12


class TailConvergenceError(RuntimeError):
    """The prefactor functional did not reach its plateau in budget."""


@dataclass(frozen=True)
class OuterWave:
    """Critical planar front and its tail prefactor."""

    z: np.ndarray
    U0: np.ndarray
    W0: np.ndarray
    a0: float
    ell_z: np.ndarray
    ell: np.ndarray
    z_converged: float


@dataclass(frozen=True)
class InnerWave:
    """Front-layer orbit at given V_inf and its rear-tail prefactor."""

    z: np.ndarray
    U_hat: np.ndarray
    V: np.ndarray
    W_hat: np.ndarray
    v_inf: float
    a_inner: float
    ell_z: np.ndarray
    ell: np.ndarray
    z_converged: float


@dataclass(frozen=True)
class AsymptoticConstants:
    """Everything the two-term speed prediction needs at one V_inf."""

    v_inf: float
    a0: float
    a_inner: float
    lambda_in: float


@dataclass(frozen=True)
class MatchingReport:
    """Branch speed against the asymptotic predictions at one gamma."""

    gamma: float
    v_inf: float
    delta_num: float
    prediction: DeltaPrediction
    err_one: float
    err_two: float
    ratio_leading: float       # delta_num (log gamma)^2 / pi^2


def _ell(U: np.ndarray, W: np.ndarray) -> np.ndarray:
    s = U + W
    return U / s + np.log(np.abs(s))


def _plateau(z: np.ndarray, ell: np.ndarray, tol: float) -> tuple[float, float]:
    """Plateau value of ell sampled at unit z spacing, scanning back from
    the far-tail anchor; returns (value, z where differences fell below tol)."""
    d = np.abs(np.diff(ell))
    if d.size == 0 or d[-1] > tol:
        raise TailConvergenceError(
            "prefactor functional still moving at the tail anchor")
    moving = np.where(d > tol)[0]
    i = int(moving[-1]) + 1 if moving.size else 0
    return float(ell[-1]), float(z[i])


def outer_wave(eps: float = DEFAULT_EPS, rtol: float = DEFAULT_RTOL,
               z_budget: float = Z_BUDGET, plateau_tol: float = PLATEAU_TOL,
               y0: tuple[float, float] | None = None) -> OuterWave:
    """Critical-speed planar front from the rear unstable eigenvector.

    y0 overrides the seed with an interior state (translation-invariance
    checks restart the orbit mid-flight).  The integration is anchored by a
    far-tail event on U0 + W0, which decays like the pure tail exponential.
    """
    lam = math.sqrt(2.0) - 1.0
    seed = np.array(y0 if y0 is not None else (1.0 - eps, -eps * lam))

    def rhs(z, y):
        return (y[1], -2.0 * y[1] - y[0] * (1.0 - y[0]))

    anchor = EventSpec(lambda y: y[0] + y[1] - 1e-14, direction="falling",
                       terminal=True)
    problem = IvpProblem(rhs=rhs, y0=seed, span=(0.0, z_budget),
                         rtol=rtol, atol=1e-30)
    res = integrate_adaptive(problem, [anchor], max_step=0.5)
    if not res.events:
        raise TailConvergenceError(
            f"outer front tail not reached within z budget {z_budget:g}")
    zs = np.arange(1.0, res.z_end, 1.0)
    Y = res.sol(zs)
    ell = _ell(Y[0], Y[1])
    value, z_conv = _plateau(zs, ell, plateau_tol)
    return OuterWave(z=res.z, U0=res.states[0], W0=res.states[1],
                     a0=math.exp(value), ell_z=zs, ell=ell, z_converged=z_conv)


def inner_wave(v_inf: float, eps: float = DEFAULT_EPS,
               rtol: float = DEFAULT_RTOL, z_budget: float = Z_BUDGET,
               plateau_tol: float = PLATEAU_TOL) -> InnerWave:
    """Front-layer orbit integrated backward from the fast eigenvector seed.

    The layer system (U_hat, V, W_hat) uses the rescaled invader; backward
    in z the invader grows like |z| e^{|z|} while V collapses, so V is
    stored as log V and the run is anchored by a growth event on U_hat.
    """
    if not 0.0 < v_inf < 1.0:
        raise ValueError(f"V_inf must lie in (0, 1), got {v_inf}")
    lam = lambda_inner(v_inf)
    e = np.array([lam, 0.5 * v_inf, lam * lam])
    n = e / np.linalg.norm(e)
    if n[0] > 0:
        n = -n
    u0 = -eps * n[0]
    v0 = v_inf - eps * abs(n[1])
    w0 = -eps * abs(n[2])

    def rhs(z, y):
        U, logV, W = y
        V = math.exp(logV) if logV > -700.0 else 0.0
        return (W, 0.5 * U,
                (0.5 * U * V * W - 2.0 * W - U * (1.0 - V)) / (1.0 - V))

    anchor = EventSpec(lambda y: y[0] - 1e10, direction="rising", terminal=True)
    problem = IvpProblem(rhs=rhs, y0=np.array([u0, math.log(v0), w0]),
                         span=(0.0, -z_budget), rtol=rtol,
                         atol=np.array([1e-30, 1e-12, 1e-30]))
    res = integrate_adaptive(problem, [anchor], max_step=0.5)
    if not res.events:
        raise TailConvergenceError(
            f"front-layer tail anchor not reached within z budget {z_budget:g}")
    zs = -np.arange(1.0, -res.z_end, 1.0)
    Y = res.sol(zs)
    ell = _ell(Y[0], Y[2])
    value, z_conv = _plateau(-zs, ell, plateau_tol)
    a_inner = math.exp(value)
    if not a_inner > 0:
        raise TailConvergenceError("front-layer prefactor came out nonpositive")
    order = np.argsort(res.z)
    return InnerWave(z=res.z[order], U_hat=res.states[0][order],
                     V=np.exp(np.maximum(res.states[1][order], -745.0)),
                     W_hat=res.states[2][order], v_inf=v_inf,
                     a_inner=a_inner, ell_z=zs, ell=ell, z_converged=-z_conv)


def constants_for(v_inf: float, a0: float | None = None) -> AsymptoticConstants:
    """Bundle the prefactors and layer eigenvalue for one V_inf."""
    if a0 is None:
        a0 = outer_wave().a0
    return AsymptoticConstants(v_inf=v_inf, a0=a0,
                               a_inner=inner_wave(v_inf).a_inner,
                               lambda_in=lambda_inner(v_inf))


def intermediate_profile(delta: float, z0: float, a0: float,
                         z: np.ndarray) -> np.ndarray:
    """Oscillatory intermediate invader profile at speed 2 - delta.

    a0 delta^{-1/2} e^{-(z - z0)} sin(delta^{1/2} (z - z0)); its first sine
    zero at z - z0 = pi delta^{-1/2} is where the front layer attaches.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    s = np.asarray(z) - z0
    rt = math.sqrt(delta)
    return a0 / rt * np.exp(-s) * np.sin(rt * s)


def validate_matching(gamma: float, v_inf: float, branch: BranchPoint,
                      constants: AsymptoticConstants | None = None) -> MatchingReport:
    """Compare a computed branch speed against the asymptotic predictions."""
    if branch.gamma != gamma or branch.v_inf != v_inf:
        raise ValueError("branch point does not match (gamma, V_inf)")
    if constants is None:
        constants = constants_for(v_inf)
    delta_num = 2.0 - branch.c
    pred = predict_delta(gamma, constants.a0, constants.a_inner)
    lg = math.log(gamma)
    return MatchingReport(
        gamma=gamma, v_inf=v_inf, delta_num=delta_num, prediction=pred,
        err_one=delta_num - pred.one_term,
        err_two=delta_num - pred.two_term,
        ratio_leading=delta_num * lg * lg / math.pi ** 2,
    )
