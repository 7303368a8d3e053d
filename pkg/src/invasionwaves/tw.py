"""Travelling-wave heteroclinic orbits and wave-speed selection.

In the frame z = x - c t the model becomes a 3-d autonomous system for
(U, V, W = U'):

    U' = W,   V' = (gamma/c) U V,
    W' = [ (gamma/c) U V W - c W - U (1 - U - V) ] / (1 - V).

Travelling waves are orbits from the invaded state (1, 0, 0) to a point
(0, V_end, 0) on the V-axis.  Two shooting directions are provided:

  - rear shooting (forward in z) seeds the unstable manifold of (1,0,0)
    and sweeps the one-parameter family via the seed's V-component.  The
    family parameter scales like exp(-(gamma/c) * integral U), so it is
    driven in log space; practical up to gamma of a few tens.

  - front shooting (backward in z) seeds the fast stable eigenvector at
    (0, V_inf, 0).  Backward in z the fast mode dominates, so the slow-mode
    contamination decays and the scheme survives arbitrarily large gamma.
    V is stored as log V throughout: it traverses scales like gamma^-k in
    the interstitial gap and must not underflow.

Selection thresholds: orbits with V_end below V_c = 1 - c/2 spiral (U goes
negative); at large gamma a second threshold V_s > V_c separates orbits
whose U dips negative from those staying positive.  V_s is where the slow
tail mode vanishes, i.e. the orbit decays along the fast eigenvector, and
the wave realized from compact initial data is the one with V_end at
max(V_c, V_s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import dispersion_speed, a_star, eig_front, eig_rear, v_critical
from .numerics import (EventSpec, IntegrationError, IvpProblem, RootResult,
                       bracket_root, integrate_adaptive)

DEFAULT_EPS = 1e-6
DEFAULT_RTOL = 1e-10
U_GUARD = 1e-3
ARRIVE_TOL = 1e-7
CONNECT_TOL = 5e-4          # achievable closest approach, see rear saddle noise
V_SATURATION = 0.995        # (1 - V) singularity guard for rear shooting
LOG_V_FLOOR = -745.0        # below this exp() underflows anyway
TANGENT_RTOL = 1e-8
PROJECTION_WINDOW = (1e-6, 1e-3)


class ShootingError(RuntimeError):
    """Shooting did not reach a classifiable termination."""

    def __init__(self, message: str, trajectory: "TwTrajectory | None" = None):
        super().__init__(message)
        self.trajectory = trajectory


class GapUndefinedError(ValueError):
    """The orbit has no resident front, so no interstitial gap exists."""


@dataclass(frozen=True)
class TailClassification:
    """How the orbit meets the V-axis.

    kind: spiral (V_end below V_c), neg_approach (slow-mode coefficient
    positive, U dips negative), pos_approach (coefficient negative),
    tangent (coefficient zero to tolerance: decay along the fast mode).
    """

    kind: str
    r2_sign: int
    approach_eigenvalue: complex


@dataclass
class TwTrajectory:
    """Sampled orbit with parameters; z increases along the wave."""

    gamma: float
    c: float
    z: np.ndarray
    U: np.ndarray
    V: np.ndarray
    W: np.ndarray
    v_end: float
    termination: str
    tail: TailClassification | None = None
    _eval: Callable[[float], tuple[float, float, float]] | None = None

    def state_at(self, z: float) -> tuple[float, float, float]:
        """Dense-output state (U, V, W) at z within the integrated range."""
        if self._eval is None:
            raise ValueError("trajectory carries no dense output")
        return self._eval(z)


@dataclass(frozen=True)
class FrontShot:
    """Backward shot from the V-axis and how it met the rear equilibrium."""

    trajectory: TwTrajectory
    side: str                  # 'overshoot' | 'undershoot'
    connected: bool
    min_rear_distance: float


@dataclass(frozen=True)
class BranchPoint:
    """A point (gamma, c) on a travelling-wave branch at fixed V_inf."""

    gamma: float
    c: float
    v_inf: float
    regime: str                # 'Vc_limited' | 'Vs_limited'


def tw_rhs(point, gamma: float, c: float):
    """Vector field of the travelling-wave system at (U, V, W).

    Accepts real or complex entries (complex-step differentiation works).
    Raises on the V = 1 singularity.
    """
    U, V, W = point
    if (1.0 - V) == 0:
        raise ZeroDivisionError("travelling-wave system is singular at V = 1")
    r = gamma / c
    return (W, r * U * V, (r * U * V * W - c * W - U * (1.0 - U - V)) / (1.0 - V))


def _rhs_logv(z, y, gamma, c):
    # internal chart (U, log V, W); V' / V = (gamma/c) U is well scaled
    U, logV, W = y
    V = math.exp(logV) if logV > LOG_V_FLOOR else 0.0
    r = gamma / c
    return ((W, r * U,
             (r * U * V * W - c * W - U * (1.0 - U - V)) / (1.0 - V)))


def _rhs_planar(z, y, c):
    # V identically zero: the reduced (U, W) front system
    U, W = y
    return (W, -c * W - U * (1.0 - U))


def _traj_from_logv(result, gamma, c, v_end, termination) -> TwTrajectory:
    order = np.argsort(result.z)
    z = result.z[order]
    U = result.states[0][order]
    V = np.exp(np.maximum(result.states[1][order], LOG_V_FLOOR))
    W = result.states[2][order]
    sol = result.sol

    def ev(zz: float) -> tuple[float, float, float]:
        s = sol(zz)
        return float(s[0]), float(math.exp(max(s[1], LOG_V_FLOOR))), float(s[2])

    return TwTrajectory(gamma=gamma, c=c, z=z, U=U, V=V, W=W, v_end=v_end,
                        termination=termination, _eval=ev)


def rear_z_max(gamma: float) -> float:
    """Default forward integration budget; the gap grows like log gamma and
    slow spiral arrivals need a floor."""
    return max(60.0, 50.0 + 3.0 * math.log(max(gamma, 1.0))) + 80.0


def front_z_span(gamma: float, c: float) -> float:
    """Default backward budget: outer region + gap (log gamma) + the slow
    resident decay tail at small gamma (rate ~ gamma/c)."""
    return min(60.0 + 3.0 * max(0.0, math.log(gamma)) + 24.0 * c / gamma, 4000.0)


def shoot_from_rear(gamma: float, c: float, mix: float = 0.0,
                    eps: float = DEFAULT_EPS, *, log_mix: float | None = None,
                    rtol: float = DEFAULT_RTOL, z_max: float | None = None,
                    classify: bool = True) -> TwTrajectory:
    """Shoot forward from the invaded state (1, 0, 0).

    The seed sits on the unstable manifold, offset eps along the departing
    eigenvector oriented so U decreases, with an additional eps*mix along
    the V-direction; mix = 0 gives the resident-free planar orbit.  mix may
    alternatively be given as log_mix = log(mix), which is how sweeps at
    gamma beyond ~10 avoid underflow.

    Terminates on axis arrival (U, W below tolerance), on U dipping below
    -U_GUARD, or on V reaching the saturation guard (mix too large; the
    trajectory heads into the V = 1 singularity while U is still near 1).
    Running out of z budget raises ShootingError.
    """
    if not (gamma > 0 and c > 0):
        raise ValueError("gamma and c must be positive")
    if not 1e-8 <= eps <= 1e-5:
        raise ValueError(f"eps must lie in [1e-8, 1e-5], got {eps}")
    if log_mix is None:
        if mix < 0:
            raise ValueError("mix must be nonnegative")
        log_mix = math.log(mix) if mix > 0 else None
    if z_max is None:
        z_max = rear_z_max(gamma)
    rear = eig_rear(c, gamma)

    if log_mix is None:
        return _shoot_rear_planar(gamma, c, eps, rear.lambda2, rtol, z_max, classify)

    y0 = np.array([1.0 - eps, math.log(eps) + log_mix, -eps * rear.lambda2])
    events = [
        EventSpec(lambda y: y[0] ** 2 + y[2] ** 2 - ARRIVE_TOL ** 2,
                  direction="falling", terminal=True),
        EventSpec(lambda y: y[0] + U_GUARD, direction="falling", terminal=True),
        EventSpec(lambda y: y[1] - math.log(V_SATURATION),
                  direction="rising", terminal=True),
    ]
    problem = IvpProblem(rhs=lambda z, y: _rhs_logv(z, y, gamma, c), y0=y0,
                         span=(0.0, z_max), rtol=rtol,
                         atol=np.array([1e-14, 1e-12, 1e-14]))
    result = integrate_adaptive(problem, events, max_step=1.0)
    fired = {h.index for h in result.events}
    if 2 in fired:
        termination = "v_saturated"
        v_end = 1.0
    elif 0 in fired:
        termination = "axis"
        v_end = float(math.exp(result.y_end[1]))
    elif 1 in fired:
        termination = "negative_u"
        v_end = float(math.exp(result.y_end[1]))
    else:
        raise ShootingError(
            f"no axis arrival within z_max = {z_max:g} at (gamma={gamma:g}, c={c:g})",
            _traj_from_logv(result, gamma, c, float(math.exp(result.y_end[1])), "z_max"))
    traj = _traj_from_logv(result, gamma, c, v_end, termination)
    if classify and termination != "v_saturated":
        try:
            traj.tail = classify_tail(traj)
        except ValueError:
            traj.tail = None
    return traj


def _shoot_rear_planar(gamma, c, eps, lam2, rtol, z_max, classify) -> TwTrajectory:
    # mix = 0: V vanishes identically and (U, W) decouple
    y0 = np.array([1.0 - eps, -eps * lam2])
    events = [
        EventSpec(lambda y: y[0] ** 2 + y[1] ** 2 - ARRIVE_TOL ** 2,
                  direction="falling", terminal=True),
        EventSpec(lambda y: y[0] + U_GUARD, direction="falling", terminal=True),
    ]
    problem = IvpProblem(rhs=lambda z, y: _rhs_planar(z, y, c), y0=y0,
                         span=(0.0, z_max), rtol=rtol, atol=1e-14)
    result = integrate_adaptive(problem, events, max_step=1.0)
    fired = {h.index for h in result.events}
    if 0 in fired:
        termination = "axis"
    elif 1 in fired:
        termination = "negative_u"
    else:
        raise ShootingError(
            f"planar orbit did not settle within z_max = {z_max:g} (c={c:g})")
    sol = result.sol

    def ev(zz: float) -> tuple[float, float, float]:
        s = sol(zz)
        return float(s[0]), 0.0, float(s[1])

    traj = TwTrajectory(gamma=gamma, c=c, z=result.z, U=result.states[0],
                        V=np.zeros_like(result.z), W=result.states[1],
                        v_end=0.0, termination=termination, _eval=ev)
    if classify:
        try:
            traj.tail = classify_tail(traj)
        except ValueError:
            traj.tail = None
    return traj


def shoot_from_front(gamma: float, c: float, v_inf: float,
                     eps: float = DEFAULT_EPS, *, rtol: float = DEFAULT_RTOL,
                     z_span: float | None = None,
                     conn_tol: float = CONNECT_TOL) -> FrontShot:
    """Shoot backward in z from (0, V_inf, 0) along the fast eigenvector.

    Requires V_inf > V_c(c) so the front eigenvalues are real.  The seed
    sign makes U positive.  Termination: U above 1 + U_GUARD (overshoot),
    U falling through 0 (undershoot), or the backward budget.  The shot is
    'connected' when it passes within conn_tol of (U, W) = (1, 0); the
    closest approach cannot beat ~1e-4 in double precision because local
    errors re-amplify along the rear saddle's fast direction.
    """
    if not (gamma > 0 and c > 0):
        raise ValueError("gamma and c must be positive")
    if not 0.0 < v_inf < 1.0:
        raise ValueError(f"V_inf must lie in (0, 1), got {v_inf}")
    fr = eig_front(c, v_inf, gamma)
    if fr.complex_pair or fr.cee <= 1.0:
        raise ValueError(
            f"front shooting needs V_inf > V_c = {v_critical(c).value:g} "
            f"(real eigenvalues); got V_inf = {v_inf:g} at c = {c:g}")
    lam3 = fr.lambda3p.real
    e3 = np.array([lam3, gamma * v_inf / c, lam3 * lam3])
    n = e3 / np.linalg.norm(e3)
    if n[0] > 0:
        n = -n
    u0 = -eps * n[0]
    v0 = v_inf - eps * abs(n[1])
    w0 = -eps * abs(n[2])
    y0 = np.array([u0, math.log(v0), w0])
    if z_span is None:
        z_span = front_z_span(gamma, c)
    events = [
        EventSpec(lambda y: y[0] - (1.0 + U_GUARD), direction="rising", terminal=True),
        EventSpec(lambda y: y[0], direction="falling", terminal=True),
    ]
    problem = IvpProblem(rhs=lambda z, y: _rhs_logv(z, y, gamma, c), y0=y0,
                         span=(0.0, -z_span), rtol=rtol,
                         atol=np.array([1e-30, 1e-12, 1e-30]))
    result = integrate_adaptive(problem, events, max_step=1.0)
    fired = {h.index for h in result.events}
    if 0 in fired:
        side = "overshoot"
    elif 1 in fired:
        side = "undershoot"
    else:
        raise ShootingError(
            f"front shot reached z budget {z_span:g} without resolving "
            f"(gamma={gamma:g}, c={c:g}, V_inf={v_inf:g})",
            _traj_from_logv(result, gamma, c, v_inf, "z_span"))
    dmin = _min_rear_distance(result)
    traj = _traj_from_logv(result, gamma, c, v_inf, side)
    return FrontShot(trajectory=traj, side=side, connected=dmin < conn_tol,
                     min_rear_distance=dmin)


def _min_rear_distance(result) -> float:
    d = np.hypot(result.states[0] - 1.0, result.states[2])
    i = int(d.argmin())
    # refine around the coarse sample minimum on the dense output
    lo = result.z[max(0, i - 1)]
    hi = result.z[min(len(result.z) - 1, i + 1)]
    zz = np.linspace(min(lo, hi), max(lo, hi), 257)
    ss = result.sol(zz)
    return float(min(d[i], np.hypot(ss[0] - 1.0, ss[2]).min()))


def classify_tail(traj: TwTrajectory,
                  window: tuple[float, float] = PROJECTION_WINDOW,
                  tangent_rtol: float = TANGENT_RTOL) -> TailClassification:
    """Classify the approach to the V-axis.

    Spiral when V_end < V_c.  Otherwise the last tail sample at controlled
    distance from the axis (|V - V_end| inside `window`, so the two decay
    modes have not yet separated beyond floating-point reach) is projected
    onto the front eigenvectors; the slow-mode coefficient's sign gives the
    approach side, and its vanishing (relative to the fast mode) tangency.
    """
    vc = v_critical(traj.c)
    if traj.v_end < vc.value:
        lam = eig_front(traj.c, max(traj.v_end, 0.0), traj.gamma).lambda2p
        return TailClassification(kind="spiral", r2_sign=0, approach_eigenvalue=lam)
    fr = eig_front(traj.c, traj.v_end, traj.gamma)
    if fr.complex_pair:
        return TailClassification(kind="spiral", r2_sign=0,
                                  approach_eigenvalue=fr.lambda2p)
    lam2 = fr.lambda2p.real
    lam3 = fr.lambda3p.real
    if abs(lam2 - lam3) < 1e-9:
        # repeated root at V_end = V_c exactly: side from the late samples
        tail_u = traj.U[-max(3, len(traj.U) // 20):]
        sign = 1 if tail_u.min() < -1e-12 else -1
        kind = "neg_approach" if sign > 0 else "pos_approach"
        return TailClassification(kind=kind, r2_sign=sign,
                                  approach_eigenvalue=lam2)
    amp = np.hypot(traj.U, traj.W)
    dV = np.abs(traj.V - traj.v_end)
    ok = (dV >= window[0]) & (dV <= window[1]) & (amp < 1e-2)
    idx = np.where(ok)[0]
    if idx.size == 0:
        # V frozen (planar orbit): fall back to an amplitude window
        ok = (amp >= window[0]) & (amp <= window[1])
        idx = np.where(ok)[0]
        if idx.size == 0:
            raise ValueError("tail too short for mode projection")
    i = int(idx[-1])
    u, w = traj.U[i], traj.W[i]
    alpha = (w - lam3 * u) / (lam2 * (lam2 - lam3))   # slow-mode amplitude here
    beta = (w - lam2 * u) / (lam3 * (lam3 - lam2))    # fast-mode amplitude here
    if abs(alpha) < tangent_rtol * max(abs(beta), 1e-300):
        return TailClassification(kind="tangent", r2_sign=0,
                                  approach_eigenvalue=lam3)
    # eigenvectors carry U-component lambda' < 0, so positive slow-mode
    # amplitude means the axis is approached from U < 0
    if alpha > 0:
        return TailClassification(kind="neg_approach", r2_sign=1,
                                  approach_eigenvalue=lam2)
    return TailClassification(kind="pos_approach", r2_sign=-1,
                              approach_eigenvalue=lam2)


def log_mix_for_v_end(gamma: float, c: float, v_end: float,
                      eps: float = DEFAULT_EPS, rtol: float = DEFAULT_RTOL,
                      tol: float = 1e-11) -> float:
    """log(mix) whose rear shot lands at the requested V_end (monotone)."""
    if not 0.0 < v_end < 1.0:
        raise ValueError("target V_end must lie in (0, 1)")
    lo, hi = LOG_V_FLOOR - math.log(eps), math.log(0.5) - math.log(eps)

    def v_of(lm: float) -> float:
        return shoot_from_rear(gamma, c, eps=eps, log_mix=lm, rtol=rtol,
                               classify=False).v_end

    v_lo, v_hi = v_of(lo), v_of(hi)
    if not (v_lo < v_end < v_hi):
        raise ShootingError(
            f"V_end target {v_end:g} outside reachable sweep "
            f"[{v_lo:g}, {v_hi:g}] at (gamma={gamma:g}, c={c:g})")
    while hi - lo > tol:
        m = 0.5 * (lo + hi)
        if v_of(m) < v_end:
            lo = m
        else:
            hi = m
    return 0.5 * (lo + hi)


def find_Vs(gamma: float, c: float, *, method: str = "auto",
            eps: float = DEFAULT_EPS, rtol: float = DEFAULT_RTOL,
            tol: float = 1e-6) -> float | None:
    """Threshold V_s separating orbits whose U dips negative from those
    staying positive, or None when no such threshold exists above V_c.

    method 'rear' bisects the rear-shot family on the slow-mode sign;
    'front' bisects V_inf on the backward miss side.  'auto' uses rear
    shooting up to gamma = 50 (the rear family parameter underflows past
    that) and front shooting beyond.
    """
    if method == "auto":
        method = "rear" if gamma <= 50.0 else "front"
    if method == "rear":
        return _find_vs_rear(gamma, c, eps, rtol, tol)
    if method == "front":
        return _find_vs_front(gamma, c, eps, rtol, tol)
    raise ValueError(f"unknown method {method!r}")


_VS_PROBE_FRACTIONS = (0.02, 0.06, 0.12, 0.25, 0.45, 0.65, 0.85, 0.95)


def _find_vs_rear(gamma, c, eps, rtol, tol) -> float | None:
    vc = v_critical(c).value
    if vc >= 1.0:
        return None

    def shot_kind(lm: float) -> tuple[str, float]:
        traj = shoot_from_rear(gamma, c, eps=eps, log_mix=lm, rtol=rtol)
        if traj.termination == "v_saturated" or traj.tail is None:
            return "unusable", traj.v_end
        return traj.tail.kind, traj.v_end

    probes = []
    for frac in _VS_PROBE_FRACTIONS:
        target = vc + frac * (1.0 - vc)
        if not target < 0.985:
            continue
        lm = log_mix_for_v_end(gamma, c, target, eps=eps, rtol=rtol)
        kind, v_end = shot_kind(lm)
        probes.append((lm, kind, v_end))
    kinds = [k for _, k, _ in probes]
    if "tangent" in kinds:
        return probes[kinds.index("tangent")][2]
    lo = None
    hi = None
    for (lm, kind, _v) in probes:
        if kind == "neg_approach":
            lo = lm
        elif kind == "pos_approach" and lo is not None:
            hi = lm
            break
    if lo is None:
        if all(k in ("pos_approach", "spiral") for k in kinds):
            return None   # every orbit above V_c stays positive
        raise ShootingError(
            f"rear sweep at (gamma={gamma:g}, c={c:g}) gave classifications "
            f"{kinds}; cannot bracket the slow-mode sign change")
    if hi is None:
        raise ShootingError(
            f"slow-mode sign change not bracketed below V_end = 0.985 at "
            f"(gamma={gamma:g}, c={c:g}): classifications {kinds}")
    k_lo, v_lo = shot_kind(lo)
    k_hi, v_hi = shot_kind(hi)
    while abs(v_hi - v_lo) > tol and hi - lo > 1e-13:
        # bracket validity: the two sides must keep opposite classifications
        assert k_lo == "neg_approach" and k_hi == "pos_approach", (k_lo, k_hi)
        m = 0.5 * (lo + hi)
        k_m, v_m = shot_kind(m)
        if k_m == "neg_approach":
            lo, k_lo, v_lo = m, k_m, v_m
        elif k_m == "pos_approach":
            hi, k_hi, v_hi = m, k_m, v_m
        elif k_m == "tangent":
            return v_m
        else:
            raise ShootingError(
                f"classification {k_m!r} inside the bisection bracket at "
                f"(gamma={gamma:g}, c={c:g})")
    return 0.5 * (v_lo + v_hi)


def _find_vs_front(gamma, c, eps, rtol, tol) -> float | None:
    vc = v_critical(c).value
    lo = vc + 1e-4 * (1.0 - vc)
    hi = 1.0 - 1e-6

    def side(v: float) -> str:
        return shoot_from_front(gamma, c, v, eps=eps, rtol=rtol).side

    s_lo, s_hi = side(lo), side(hi)
    if s_lo == s_hi:
        return None
    while hi - lo > tol:
        m = 0.5 * (lo + hi)
        if side(m) == s_lo:
            lo = m
        else:
            hi = m
    return 0.5 * (lo + hi)


def branch_speed(gamma: float, v_inf: float, *, c_tol: float = 1e-12,
                 eps: float = DEFAULT_EPS, rtol: float = DEFAULT_RTOL) -> BranchPoint:
    """Wave speed of the compact-support branch at (gamma, V_inf).

    Solves V_s(gamma, c) = V_inf by bisection over c on the backward-shot
    miss side; when no sign change exists in (2(1 - V_inf), 2) the branch
    is limited by V_c and the speed is exactly 2 (1 - V_inf).
    """
    if not (gamma > 0 and 0.0 < v_inf < 1.0):
        raise ValueError("need gamma > 0 and V_inf in (0, 1)")
    c_plateau = 2.0 * (1.0 - v_inf)
    lo = c_plateau + 1e-6
    hi = 2.0 - 1e-9

    def side(c: float) -> str:
        return shoot_from_front(gamma, c, v_inf, eps=eps, rtol=rtol).side

    s_lo, s_hi = side(lo), side(hi)
    if s_lo == s_hi:
        return BranchPoint(gamma=gamma, c=c_plateau, v_inf=v_inf,
                           regime="Vc_limited")
    while hi - lo > c_tol:
        m = 0.5 * (lo + hi)
        if side(m) == s_lo:
            lo = m
        else:
            hi = m
    return BranchPoint(gamma=gamma, c=0.5 * (lo + hi), v_inf=v_inf,
                       regime="Vs_limited")


def selected_speed(gamma: float, v0: float, a: float | None = None) -> float:
    """Long-time front speed for resident density v0 and invader data that
    is compact (a None) or decays like exp(-a x).

    Decay rates below a_star(v0) select the dispersion speed (above 2) at
    every gamma; otherwise the wave cannot out-run the compact-support
    branch, whichever of the two speeds is larger wins.
    """
    if a is None:
        return branch_speed(gamma, v0).c
    c_disp = dispersion_speed(a, v0)
    if a < a_star(v0):
        return c_disp
    return max(c_disp, branch_speed(gamma, v0).c)


def gap_width(traj: TwTrajectory, theta: float = 0.01) -> float:
    """Width of the interstitial region: z(V = theta V_end) - z(U = theta).

    Both crossings are located on the dense output.  Orbits without a
    resident front (V identically zero) have no gap and raise.
    """
    if not 0.0 < theta <= 0.1:
        raise ValueError("theta must lie in (0, 0.1]")
    if traj.v_end <= 0.0 or np.all(traj.V <= 0.0):
        raise GapUndefinedError("orbit has no resident front (V vanishes)")
    z_u = _crossing(traj, 0, theta, "falling")
    z_v = _crossing(traj, 1, theta * traj.v_end, "rising")
    return float(z_v - z_u)


def _crossing(traj: TwTrajectory, component: int, level: float, sense: str) -> float:
    vals = (traj.U, traj.V, traj.W)[component] - level
    if sense == "falling":
        hits = np.where((vals[:-1] >= 0) & (vals[1:] < 0))[0]
    else:
        hits = np.where((vals[:-1] <= 0) & (vals[1:] > 0))[0]
    if hits.size == 0:
        raise GapUndefinedError(
            f"component {component} never crosses level {level:g}")
    i = int(hits[-1] if sense == "falling" else hits[0])

    def f(zz: float) -> float:
        return traj.state_at(zz)[component] - level

    r: RootResult = bracket_root(f, (float(traj.z[i]), float(traj.z[i + 1])),
                                 tol=1e-11)
    return r.root


def rear_connection_residual(traj: TwTrajectory,
                             u_window: tuple[float, float] = (0.2, 0.9)) -> float:
    """Distance of the orbit's rear tail to the invaded state's unstable
    manifold, measured as sup |W(U) - W_ref(U)| over the U window.

    V is far below machine precision there, so the reference manifold is the
    planar reduced system's, computed to near machine accuracy.  This is the
    meaningful double-precision connection test: the literal closest
    approach to (1, 0, 0) bottoms out near 1e-4 (noise re-amplified along
    the rear saddle's fast direction).
    """
    c = traj.c
    lam2 = eig_rear(c, traj.gamma).lambda2
    e0 = 1e-9
    events = [EventSpec(lambda y: y[0] - 0.5 * u_window[0],
                        direction="falling", terminal=True)]
    problem = IvpProblem(rhs=lambda z, y: _rhs_planar(z, y, c),
                         y0=np.array([1.0 - e0, -e0 * lam2]),
                         span=(0.0, 400.0), rtol=1e-13, atol=1e-16)
    ref = integrate_adaptive(problem, events, max_step=0.25)
    u_ref = ref.states[0][::-1]
    w_ref = ref.states[1][::-1]
    mask = (traj.U >= u_window[0]) & (traj.U <= u_window[1])
    if not np.any(mask):
        raise ValueError("trajectory has no samples inside the U window")
    u_t = traj.U[mask]
    w_t = traj.W[mask]
    w_interp = np.interp(u_t, u_ref, w_ref)
    return float(np.abs(w_t - w_interp).max())
