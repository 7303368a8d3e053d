"""Reusable numerical kernels.

Thin, contract-carrying wrappers around scipy/numpy workhorses plus a
safeguarded bracketing root finder:

  - integrate_adaptive: explicit embedded Runge-Kutta (DOP853) with dense
    output and event location.
  - integrate_stiff: LSODA with banded finite-difference Jacobian, streamed
    one output time at a time (the semi-discrete PDE has ~1e4 cells, so
    states are yielded rather than accumulated).
  - linear_least_squares: QR-based (never normal equations).
  - bracket_root: bisection with a final secant polish; the bracket halves
    every iteration, so the iteration count is bounded by
    ceil(log2(width/tol)) regardless of how nasty f is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.integrate import ode, solve_ivp


class IntegrationError(RuntimeError):
    """Integrator failure; carries the last accepted time and state."""

    def __init__(self, message: str, t_last: float | None = None,
                 y_last: np.ndarray | None = None):
        super().__init__(message)
        self.t_last = t_last
        self.y_last = y_last


class BracketError(ValueError):
    """The supplied interval does not bracket a sign change."""


class RankDeficiencyError(ValueError):
    """Least-squares design matrix is rank deficient."""

    def __init__(self, message: str, degenerate_columns: tuple[int, ...]):
        super().__init__(message)
        self.degenerate_columns = degenerate_columns


@dataclass(frozen=True)
class IvpProblem:
    """An initial value problem y' = rhs(t, y) over span (may be decreasing)."""

    rhs: Callable[[float, np.ndarray], Sequence[float] | np.ndarray]
    y0: np.ndarray | Sequence[float]
    span: tuple[float, float]
    rtol: float = 1e-8
    atol: float | np.ndarray = 1e-10

    def __post_init__(self) -> None:
        if not self.rtol > 0:
            raise ValueError("rtol must be positive")
        if np.any(np.asarray(self.atol) < 0):
            raise ValueError("atol must be nonnegative")


@dataclass(frozen=True)
class EventSpec:
    """Scalar event g(state) = 0 located along the trajectory.

    direction: 'rising' triggers on g going negative to positive along the
    integration path, 'falling' the opposite, 'any' both.  Terminal events
    stop the integration.
    """

    func: Callable[[np.ndarray], float]
    direction: str = "any"
    terminal: bool = False

    def __post_init__(self) -> None:
        if self.direction not in ("rising", "falling", "any"):
            raise ValueError(f"unknown event direction {self.direction!r}")


@dataclass(frozen=True)
class EventHit:
    index: int          # position in the events list
    z: float
    state: np.ndarray


@dataclass
class AdaptiveResult:
    """Accepted steps, event hits, and the dense interpolant."""

    z: np.ndarray                 # accepted step locations, integration order
    states: np.ndarray            # shape (dim, len(z))
    events: list[EventHit]
    sol: Callable[[float], np.ndarray]
    status: int                   # 0 span end, 1 terminal event
    message: str

    @property
    def z_end(self) -> float:
        return float(self.z[-1])

    @property
    def y_end(self) -> np.ndarray:
        return self.states[:, -1]


_DIRECTION_CODE = {"rising": 1.0, "falling": -1.0, "any": 0.0}


def integrate_adaptive(problem: IvpProblem, events: Sequence[EventSpec] = (),
                       max_step: float = np.inf,
                       method: str = "DOP853") -> AdaptiveResult:
    """Adaptive explicit integration with dense output and event detection.

    Event locations are resolved by root finding on the dense interpolant,
    so they do not depend on output sampling.  A terminal event stops the
    run.  Step-size underflow raises IntegrationError with the last state.
    """
    scipy_events = []
    for spec in events:
        def g(t, y, *args, _f=spec.func):
            return _f(y)
        g.terminal = spec.terminal
        g.direction = _DIRECTION_CODE[spec.direction]
        scipy_events.append(g)

    sol = solve_ivp(problem.rhs, problem.span, np.asarray(problem.y0, dtype=float),
                    method=method, rtol=problem.rtol, atol=problem.atol,
                    dense_output=True, events=scipy_events or None,
                    max_step=max_step)
    if sol.status == -1:
        raise IntegrationError(
            f"adaptive integration failed: {sol.message}",
            t_last=float(sol.t[-1]) if sol.t.size else None,
            y_last=sol.y[:, -1] if sol.t.size else None,
        )
    hits: list[EventHit] = []
    if events:
        for k, (tk, yk) in enumerate(zip(sol.t_events, sol.y_events)):
            for t_hit, y_hit in zip(tk, yk):
                hits.append(EventHit(index=k, z=float(t_hit), state=np.asarray(y_hit)))
        hits.sort(key=lambda h: h.z, reverse=problem.span[1] < problem.span[0])
    return AdaptiveResult(z=sol.t, states=sol.y, events=hits, sol=sol.sol,
                          status=sol.status, message=sol.message)


def integrate_stiff(problem: IvpProblem, band: tuple[int, int],
                    output_times: Sequence[float],
                    nsteps: int = 200_000) -> Iterator[tuple[float, np.ndarray]]:
    """Stiff integration (LSODA, banded Jacobian), yielding requested times.

    band = (lband, uband) is the Jacobian bandwidth in state indices; the
    Jacobian itself is formed internally by banded finite differences.
    Yields (t, state_copy) for each requested output time in order; the
    integrator continues internally, so dense output grids cost little.
    """
    lband, uband = band
    y0 = np.asarray(problem.y0, dtype=float)
    r = ode(problem.rhs)
    r.set_integrator("lsoda", rtol=problem.rtol, atol=problem.atol,
                     lband=lband, uband=uband, nsteps=nsteps)
    t0 = problem.span[0]
    r.set_initial_value(y0, t0)
    for t in output_times:
        if t == t0:
            yield t0, y0.copy()
            continue
        y = r.integrate(t)
        if not r.successful():
            raise IntegrationError(
                f"stiff integration failed before t={t} "
                "(repeated Newton/step-size failures)",
                t_last=float(r.t), y_last=np.asarray(y))
        yield t, np.asarray(y).copy()


@dataclass(frozen=True)
class FitResult:
    coefficients: np.ndarray
    residual_norm: float
    covariance_diag: np.ndarray


def linear_least_squares(rows: np.ndarray | Sequence[Sequence[float]],
                         observations: np.ndarray | Sequence[float]) -> FitResult:
    """Minimize ||A x - b|| via QR; returns coefficients, residual norm,
    and the diagonal of the coefficient covariance.

    Raises RankDeficiencyError naming the degenerate column(s) when A does
    not have full column rank.
    """
    A = np.asarray(rows, dtype=float)
    b = np.asarray(observations, dtype=float)
    if A.ndim != 2:
        raise ValueError("design matrix must be 2-d")
    m, n = A.shape
    if m < n:
        raise ValueError(f"need at least as many rows ({m}) as columns ({n})")
    Q, R = np.linalg.qr(A)
    diag = np.abs(np.diag(R))
    tol = max(m, n) * np.finfo(float).eps * (diag.max() if diag.size else 0.0)
    if np.any(diag <= tol):
        # pivoted QR identifies which columns carry no new direction
        from scipy.linalg import qr as qr_pivoted
        _, Rp, perm = qr_pivoted(A, mode="economic", pivoting=True)
        dp = np.abs(np.diag(Rp))
        rank = int(np.sum(dp > tol))
        degenerate = tuple(int(j) for j in perm[rank:])
        raise RankDeficiencyError(
            f"design matrix is rank deficient (rank {rank} of {n}); "
            f"degenerate column(s): {degenerate}", degenerate)
    coef = np.linalg.solve(R, Q.T @ b)
    resid = A @ coef - b
    rss = float(resid @ resid)
    sigma2 = rss / (m - n) if m > n else 0.0
    Rinv = np.linalg.solve(R, np.eye(n))
    cov_diag = sigma2 * np.sum(Rinv * Rinv, axis=1)
    return FitResult(coefficients=coef, residual_norm=math.sqrt(rss),
                     covariance_diag=cov_diag)


@dataclass(frozen=True)
class RootResult:
    root: float
    f_root: float
    iterations: int

    def __float__(self) -> float:
        return self.root


def bracket_root(f: Callable[[float], float], bracket: tuple[float, float],
                 tol: float = 1e-12) -> RootResult:
    """Find a root of f inside a sign-changing bracket.

    Pure bisection (guaranteed halving, so at most
    ceil(log2((hi-lo)/tol)) iterations) followed by one secant polish
    inside the final bracket.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError(f"bracket must satisfy lo < hi, got {bracket}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return RootResult(lo, 0.0, 0)
    if fhi == 0.0:
        return RootResult(hi, 0.0, 0)
    if flo * fhi > 0:
        raise BracketError(
            f"no sign change on [{lo}, {hi}]: f(lo)={flo:.6g}, f(hi)={fhi:.6g}")
    iterations = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # bracket at floating-point resolution
        fmid = f(mid)
        iterations += 1
        if fmid == 0.0:
            return RootResult(mid, 0.0, iterations)
        if flo * fmid < 0:
            hi, fhi = mid, fmid
        else:
            lo, flo = mid, fmid
    # secant polish within the converged bracket
    if fhi != flo:
        s = lo - flo * (hi - lo) / (fhi - flo)
        if lo <= s <= hi:
            return RootResult(s, f(s), iterations)
    return RootResult(0.5 * (lo + hi), f(0.5 * (lo + hi)), iterations)
