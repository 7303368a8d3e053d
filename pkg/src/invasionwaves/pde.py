"""Method-of-lines simulation of the two-component invasion system.

Cell-centred finite volumes on a uniform grid over [0, L] with zero-flux
boundaries.  The state is interleaved (u_0, v_0, u_1, v_1, ...) so the
semi-discrete Jacobian is banded with bandwidth (2, 3), which is what the
stiff integrator exploits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams
from .numerics import IvpProblem, integrate_stiff

#: Jacobian bandwidth (lband, uband) of the interleaved semi-discrete system.
BAND = (2, 3)

DEFAULT_RTOL = 1e-6
DEFAULT_ATOL = 1e-9


class FrontNotFoundError(ValueError):
    """No downward crossing of the front level exists in the profile."""


class DomainEscapeError(RuntimeError):
    """The front reached the guard fraction of the domain; results past
    this point would be contaminated by the right boundary."""

    def __init__(self, message: str, t: float, partial=None):
        super().__init__(message)
        self.t = t
        self.partial = partial


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell-centred grid on [0, L] with N cells."""

    L: float
    N: int

    def __post_init__(self) -> None:
        if not self.L > 0:
            raise ValueError("domain length must be positive")
        if self.N < 16:
            raise ValueError(f"need at least 16 cells, got {self.N}")

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.N) + 0.5) * self.dx


@dataclass(frozen=True)
class InitialCondition:
    """Invader profile (compact block or exponential tail) over uniform v0."""

    kind: str
    v0: float
    width: float = 1.0
    height: float = 1.0
    a: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("compact", "exponential"):
            raise ValueError(f"unknown initial condition kind {self.kind!r}")
        if not 0.0 <= self.v0 < 1.0:
            raise ValueError(f"v0 must lie in [0, 1), got {self.v0}")
        if self.kind == "compact":
            if not self.width > 0:
                raise ValueError("compact width must be positive")
            if not 0.0 < self.height <= 1.0:
                raise ValueError("compact height must lie in (0, 1]")
        else:
            if self.a is None or not self.a > 0:
                raise ValueError("exponential decay rate a must be positive")

    @classmethod
    def compact(cls, v0: float, width: float = 1.0, height: float = 1.0) -> "InitialCondition":
        return cls(kind="compact", v0=v0, width=width, height=height)

    @classmethod
    def exponential(cls, v0: float, a: float) -> "InitialCondition":
        return cls(kind="exponential", v0=v0, a=a)

    def u_profile(self, grid: Grid1D) -> np.ndarray:
        x = grid.centers
        if self.kind == "compact":
            # realized cell-wise, no smoothing: u_i = height for x_i < width
            return np.where(x < self.width, self.height, 0.0)
        return np.exp(-self.a * x)


@dataclass(frozen=True)
class PdeState:
    """Cell values of both species at one time."""

    t: float
    u: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class FrontTrace:
    """Front location samples (t, x_f), t strictly increasing."""

    t: np.ndarray
    x_f: np.ndarray
    level: float = 0.5

    def __len__(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class PdeRun:
    """Everything a simulation produced."""

    params: ModelParams
    grid: Grid1D
    ic: InitialCondition
    states: list[PdeState]
    trace: FrontTrace
    rtol: float
    atol: float


def pack(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    y = np.empty(2 * len(u))
    y[0::2] = u
    y[1::2] = v
    return y


def unpack(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return y[0::2], y[1::2]


def semidiscretize(params: ModelParams, grid: Grid1D):
    """Right-hand side over the interleaved (u, v) state vector.

    Interior faces carry flux (1 - v_face)(u_{i+1} - u_i)/dx with v_face the
    arithmetic face average; boundary fluxes are zero.  Reactions are
    u(1 - u - v) and -gamma u v per cell.
    """
    gamma = params.gamma
    dx = grid.dx

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        u = y[0::2]
        v = y[1::2]
        v_face = 0.5 * (v[:-1] + v[1:])
        flux = (1.0 - v_face) * np.diff(u) / dx
        dudt = np.empty_like(u)
        dudt[0] = flux[0] / dx
        dudt[-1] = -flux[-1] / dx
        dudt[1:-1] = (flux[1:] - flux[:-1]) / dx
        dudt += u * (1.0 - u - v)
        out = np.empty_like(y)
        out[0::2] = dudt
        out[1::2] = -gamma * u * v
        return out

    return rhs


def front_location(grid: Grid1D, u: np.ndarray, level: float = 0.5) -> float:
    """Rightmost downward crossing of `level`, interpolated linearly
    between neighbouring cell centres."""
    down = np.where((u[:-1] >= level) & (u[1:] < level))[0]
    if down.size == 0:
        raise FrontNotFoundError(
            f"profile has no downward crossing of level {level} "
            "(front extinct or escaped the grid)")
    i = int(down[-1])
    x = grid.centers
    return float(x[i] + (level - u[i]) * (x[i + 1] - x[i]) / (u[i + 1] - u[i]))


def phase_curve(state: PdeState) -> np.ndarray:
    """(u_i, v_i) pairs ordered by x, for overlay against travelling waves."""
    return np.column_stack([state.u, state.v])


def _front_sample_times(t_end: float, n: int) -> np.ndarray:
    # geometric spacing: dense early, still dense in log t late, which is
    # where the logarithmic front-position fit lives
    return np.geomspace(max(1e-3 * t_end, 1e-3), t_end, n)


def run(params: ModelParams, ic: InitialCondition, grid: Grid1D, t_end: float,
        output_times: tuple[float, ...] | list[float] = (),
        rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
        n_front_samples: int = 800, level: float = 0.5,
        domain_fraction: float = 0.9) -> PdeRun:
    """Integrate the semi-discrete system to t_end.

    Snapshots are stored at output_times (plus t=0 and t_end); the front
    location is sampled densely along the way.  Aborts with
    DomainEscapeError once the front passes domain_fraction * L, since the
    zero-flux right boundary then contaminates the solution.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    output_times = sorted(set(float(t) for t in output_times) | {0.0, float(t_end)})
    if output_times[0] < 0 or output_times[-1] > t_end:
        raise ValueError("output_times must lie within [0, t_end]")

    u0 = ic.u_profile(grid)
    v0 = np.full(grid.N, ic.v0)
    y0 = pack(u0, v0)
    rhs = semidiscretize(params, grid)
    sample_times = np.unique(np.concatenate(
        [_front_sample_times(t_end, n_front_samples), np.asarray(output_times)]))

    problem = IvpProblem(rhs=rhs, y0=y0, span=(0.0, t_end), rtol=rtol, atol=atol)
    guard_x = domain_fraction * grid.L
    states: list[PdeState] = []
    trace_t: list[float] = []
    trace_x: list[float] = []
    store = set(output_times)

    def snapshot(t: float, y: np.ndarray) -> None:
        u, v = unpack(y)
        states.append(PdeState(t=t, u=u.copy(), v=v.copy()))

    snapshot(0.0, y0)
    for t, y in integrate_stiff(problem, BAND, sample_times):
        u, v = unpack(y)
        try:
            xf = front_location(grid, u, level)
        except FrontNotFoundError:
            xf = None
        if xf is not None:
            trace_t.append(t)
            trace_x.append(xf)
            if xf > guard_x:
                partial = PdeRun(params=params, grid=grid, ic=ic, states=states,
                                 trace=FrontTrace(np.array(trace_t), np.array(trace_x), level),
                                 rtol=rtol, atol=atol)
                raise DomainEscapeError(
                    f"front reached {xf:.2f} > {domain_fraction:g} L = {guard_x:.2f} "
                    f"at t = {t:.3f}; enlarge the domain or stop earlier",
                    t=t, partial=partial)
        if t in store and t > 0.0:
            snapshot(t, y)

    trace = FrontTrace(t=np.array(trace_t), x_f=np.array(trace_x), level=level)
    return PdeRun(params=params, grid=grid, ic=ic, states=states, trace=trace,
                  rtol=rtol, atol=atol)
