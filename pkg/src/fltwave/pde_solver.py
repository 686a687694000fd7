"""Explicit finite-volume solver for the flux-limited porous-media equation

    u_t = (z(u, u_x))_x + F(u),   z = nu u^m u_x / sqrt(u^2 + (nu/c)^2 u_x^2).

Cell averages on a uniform grid.  Face states come from minmod-limited
MUSCL reconstruction, face gradients from the compact difference of the two
adjacent cells.  Time stepping is SSP-RK2 (:func:`step`) or, in
:func:`run`, optionally RKL2 super-time-stepping, which is explicit but
relaxes the parabolic step restriction.

Cells outside the current support stay exactly zero (zero flux, F(0)=0),
so every kernel only works on the support plus a safety margin.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .errors import CflViolation, NonFinite, ValidationError
from .reaction import ModelParams, lipschitz_constant

__all__ = [
    "Boundary",
    "Grid",
    "PdeState",
    "FrontTrace",
    "RunResult",
    "flux_z",
    "time_step",
    "step",
    "run",
    "front_position",
    "mass",
    "l1_stability_check",
    "StabilityReport",
    "bump",
    "smooth_step",
    "compare_front",
    "wave_threshold_point",
    "write_run_config",
]

EPS_DT = 1e-30
_MAX_OVERSHOOT = 1e-12
_GHOST = 2


class Boundary(enum.Enum):
    DIRICHLET_ZERO = "DirichletZero"
    NEUMANN_ZERO = "NeumannZero"

    @classmethod
    def parse(cls, value) -> "Boundary":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("_", "").replace("-", "")
        for b in cls:
            if b.value.lower() == key or b.name.lower().replace("_", "") == key:
                return b
        if key in ("dirichlet",):
            return cls.DIRICHLET_ZERO
        if key in ("neumann",):
            return cls.NEUMANN_ZERO
        raise ValidationError(f"unknown boundary condition {value!r}")


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_cells: int

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValidationError("grid needs x_max > x_min")
        if int(self.n_cells) != self.n_cells or self.n_cells < 16:
            raise ValidationError(f"grid needs at least 16 cells, got {self.n_cells}")
        object.__setattr__(self, "n_cells", int(self.n_cells))

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx

    @classmethod
    def with_spacing(cls, x_min: float, x_max: float, dx: float) -> "Grid":
        return cls(x_min, x_max, int(round((x_max - x_min) / dx)))

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "n_cells": self.n_cells}


@dataclass
class PdeState:
    grid: Grid
    u: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.u = np.ascontiguousarray(self.u, dtype=float)
        if self.u.shape != (self.grid.n_cells,):
            raise ValidationError("state size does not match the grid")
        if self.t < 0:
            raise ValidationError("time must be non-negative")
        if np.any(self.u < 0) or np.any(self.u > 1 + _MAX_OVERSHOOT):
            raise ValidationError("initial values must lie in [0, 1]")

    def copy(self) -> "PdeState":
        return PdeState(self.grid, self.u.copy(), self.t)

    def export(self, path: str | Path) -> None:
        np.savetxt(path, np.column_stack([self.grid.centers, self.u]), delimiter=",",
                   header="x,u", comments="", fmt="%.15g")


@dataclass
class FrontTrace:
    times: list = field(default_factory=list)
    positions: list = field(default_factory=list)
    speeds: list = field(default_factory=list)

    def finalize(self) -> None:
        t, x = np.asarray(self.times), np.asarray(self.positions)
        if len(t) >= 2:
            self.speeds = list(np.gradient(x, t))
        else:
            self.speeds = [float("nan")] * len(t)

    def late_speed(self, fraction: float = 0.25) -> float:
        """Mean front speed over the final ``fraction`` of the recorded time span."""
        t, x = np.asarray(self.times), np.asarray(self.positions)
        if len(t) < 2:
            return float("nan")
        t0 = t[-1] - fraction * (t[-1] - t[0])
        k = int(np.searchsorted(t, t0))
        k = min(k, len(t) - 2)
        return float((x[-1] - x[k]) / (t[-1] - t[k]))

    def export(self, path: str | Path) -> None:
        self.finalize() if len(self.speeds) != len(self.times) else None
        np.savetxt(path, np.column_stack([self.times, self.positions, self.speeds]),
                   delimiter=",", header="t,x_front,speed_est", comments="", fmt="%.15g")


# ---------------------------------------------------------------------------
# kernels


@njit(cache=True, fastmath=True)
def _flux(u, g, nu, kappa, m):
    if u <= 0.0:
        return 0.0
    den = math.sqrt(u * u + kappa * kappa * g * g)
    if den == 0.0:
        return 0.0
    um = u * u if m == 2.0 else u**m
    return nu * um * g / den


@njit(cache=True, fastmath=True)
def _reaction(u, kind, p, q):
    if kind == 0:
        return u * (1.0 - u)
    return u**p * (1.0 - u**q)


@njit(cache=True, fastmath=True)
def _minmod(a, b):
    if a * b <= 0.0:
        return 0.0
    return a if abs(a) < abs(b) else b


@njit(cache=True, fastmath=True)
def _fill_ghosts(w, n, neumann):
    # physical cell i lives at w[i + 2]
    if neumann:
        w[1] = w[2]
        w[0] = w[3]
        w[n + 2] = w[n + 1]
        w[n + 3] = w[n]
    else:
        w[0] = 0.0
        w[1] = 0.0
        w[n + 2] = 0.0
        w[n + 3] = 0.0


@njit(cache=True, fastmath=True)
def _rhs(w, out, lo, hi, n, dx, nu, c, m, kind, p, q, upwind, neumann):
    """out[i+2] = (z_{i+1/2} - z_{i-1/2})/dx + F(u_i) for lo <= i < hi."""
    kappa = nu / c
    z_prev = 0.0
    for j in range(lo, hi + 1):
        # face j sits between cells j-1 and j
        if neumann and (j == 0 or j == n):
            z = 0.0
        else:
            a = j + 1
            b = j + 2
            g = (w[b] - w[a]) / dx
            if upwind:
                # trace on the side the flux comes from
                if g < 0.0:
                    uf = w[a] + 0.5 * _minmod(w[a] - w[a - 1], w[b] - w[a])
                else:
                    uf = w[b] - 0.5 * _minmod(w[b] - w[a], w[b + 1] - w[b])
            else:
                uL = w[a] + 0.5 * _minmod(w[a] - w[a - 1], w[b] - w[a])
                uR = w[b] - 0.5 * _minmod(w[b] - w[a], w[b + 1] - w[b])
                uf = 0.5 * (uL + uR)
            z = _flux(uf, g, nu, kappa, m)
        if j > lo:
            i = j - 1
            out[i + 2] = (z - z_prev) / dx + _reaction(w[i + 2], kind, p, q)
        z_prev = z


@njit(cache=True, fastmath=True)
def _support(w, n):
    lo = -1
    for i in range(n):
        if w[i + 2] != 0.0:
            lo = i
            break
    if lo < 0:
        return 0, 0
    hi = lo
    for i in range(n - 1, lo - 1, -1):
        if w[i + 2] != 0.0:
            hi = i + 1
            break
    return lo, hi


@njit(cache=True, fastmath=True)
def _window(w, n, margin):
    lo, hi = _support(w, n)
    if hi == 0:
        return 0, 0
    return max(lo - margin, 0), min(hi + margin, n)


@njit(cache=True, fastmath=True)
def _ssprk2(w, k1, w1, dt, n, dx, nu, c, m, kind, p, q, upwind, neumann):
    lo, hi = _window(w, n, 4)
    if hi == 0:
        return
    _fill_ghosts(w, n, neumann)
    _rhs(w, k1, lo, hi, n, dx, nu, c, m, kind, p, q, upwind, neumann)
    w1[:] = w
    for i in range(lo, hi):
        w1[i + 2] = w[i + 2] + dt * k1[i + 2]
    _fill_ghosts(w1, n, neumann)
    _rhs(w1, k1, lo, hi, n, dx, nu, c, m, kind, p, q, upwind, neumann)
    for i in range(lo, hi):
        w[i + 2] = 0.5 * (w[i + 2] + w1[i + 2] + dt * k1[i + 2])


@njit(cache=True, fastmath=True)
def _rkl2(w, y1, y2, l0, lj, ytmp, s, tau, n, dx, nu, c, m, kind, p, q, upwind, neumann):
    """One RKL2 super-step with s stages."""
    lo, hi = _window(w, n, 2 * s + 4)
    if hi == 0:
        return
    w1 = 4.0 / (s * s + s - 2.0)
    _fill_ghosts(w, n, neumann)
    _rhs(w, l0, lo, hi, n, dx, nu, c, m, kind, p, q, upwind, neumann)
    y1[:] = w
    y2[:] = w
    ytmp[:] = w
    mu1 = w1 / 3.0
    for i in range(lo, hi):
        y1[i + 2] = w[i + 2] + mu1 * tau * l0[i + 2]
    bjm2 = 1.0 / 3.0
    bjm1 = 1.0 / 3.0
    for j in range(2, s + 1):
        bj = (j * j + j - 2.0) / (2.0 * j * (j + 1.0))
        mu = (2.0 * j - 1.0) / j * bj / bjm1
        nuj = -(j - 1.0) / j * bj / bjm2
        mut = mu * w1
        gt = -(1.0 - bjm1) * mut
        _fill_ghosts(y1, n, neumann)
        _rhs(y1, lj, lo, hi, n, dx, nu, c, m, kind, p, q, upwind, neumann)
        cw = 1.0 - mu - nuj
        for i in range(lo, hi):
            k = i + 2
            ytmp[k] = (mu * y1[k] + nuj * y2[k] + cw * w[k]
                       + tau * (mut * lj[k] + gt * l0[k]))
        # rotate buffers: y2 <- y1, y1 <- ytmp
        y2, y1, ytmp = y1, ytmp, y2
        bjm2 = bjm1
        bjm1 = bj
    for i in range(lo, hi):
        w[i + 2] = y1[i + 2]


# ---------------------------------------------------------------------------
# public operations


def flux_z(params: ModelParams, u_face: float, du_dx: float) -> float:
    """Limited flux nu u^m u_x / sqrt(u^2 + (nu/c)^2 u_x^2); zero when u_face = 0."""
    if u_face < 0:
        raise ValidationError("u_face must be non-negative")
    if math.isinf(du_dx):
        return math.copysign(params.c * u_face**params.m, du_dx)
    return float(_flux(float(u_face), float(du_dx), params.nu, params.nu / params.c, params.m))


def _kind(params):
    r = params.reaction
    return (0, 1.0, 1.0) if r.kind == "fkpp" else (1, r.p, r.q)


def _pad(u):
    w = np.zeros(len(u) + 2 * _GHOST)
    w[_GHOST:-_GHOST] = u
    return w


def time_step(params: ModelParams, grid: Grid, u: np.ndarray, cfl: float,
              lip: float | None = None) -> float:
    """cfl * min(hyperbolic, parabolic, reaction) step for the current maximum of u.

    The reaction limit 1/L (L the Lipschitz constant of F) only binds for
    nearly vanishing data, where the transport limits blow up.
    """
    umax = float(np.max(u)) if len(u) else 0.0
    g = max(umax, 0.0) ** (params.m - 1.0)
    dx = grid.dx
    hyp = dx / (params.m * params.c * g + EPS_DT)
    par = dx * dx / (2.0 * params.nu * g + EPS_DT)
    if lip is None:
        lip = lipschitz_constant(params)
    return cfl * min(hyp, par, 1.0 / lip)


def _hyperbolic_step(params, grid, u, cfl, lip):
    g = max(float(np.max(u)), 0.0) ** (params.m - 1.0)
    return cfl * min(grid.dx / (params.m * params.c * g + EPS_DT), 1.0 / lip)


def _check(u, t):
    if not np.all(np.isfinite(u)):
        raise NonFinite(f"non-finite values at t={t}")
    top = float(np.max(u))
    if top > 1.0 + _MAX_OVERSHOOT:
        raise CflViolation(f"max u = {top!r} exceeds 1 at t={t}")
    if float(np.min(u)) < -_MAX_OVERSHOOT:
        raise CflViolation(f"min u = {float(np.min(u))!r} below 0 at t={t}")


def _advance_ssprk2(params, grid, w, dt, bc, upwind, work):
    kind, p, q = _kind(params)
    _ssprk2(w, work[0], work[1], dt, grid.n_cells, grid.dx, params.nu, params.c, params.m,
            kind, p, q, upwind, bc is Boundary.NEUMANN_ZERO)


def step(params: ModelParams, state: PdeState, bc=Boundary.DIRICHLET_ZERO, cfl: float = 0.25,
         dt: float | None = None, upwind: bool = True) -> PdeState:
    """One SSP-RK2 step; returns a new state.

    ``dt`` defaults to :func:`time_step`.  Face states are the average of
    the two reconstructed traces unless ``upwind`` selects the trace on the
    uphill side.
    """
    if not 0 < cfl <= 0.5:
        raise ValidationError(f"cfl must lie in (0, 0.5], got {cfl}")
    bc = Boundary.parse(bc)
    if dt is None:
        dt = time_step(params, state.grid, state.u, cfl)
    w = _pad(state.u)
    work = (np.zeros_like(w), np.zeros_like(w))
    _advance_ssprk2(params, state.grid, w, dt, bc, upwind, work)
    u = w[_GHOST:-_GHOST].copy()
    t = state.t + dt
    _check(u, t)
    # clip rounding-level excursions
    np.clip(u, 0.0, 1.0, out=u)
    return PdeState(state.grid, u, t)


def front_position(grid: Grid, u: np.ndarray, threshold: float = 0.01) -> float:
    """First x from the right where u reaches ``threshold``, by linear interpolation."""
    idx = np.flatnonzero(u >= threshold)
    if not len(idx):
        return float("nan")
    i = int(idx[-1])
    x = grid.centers
    if i == len(u) - 1:
        return float(x[i])
    u0, u1 = u[i], u[i + 1]
    return float(x[i] + (u0 - threshold) / (u0 - u1) * (x[i + 1] - x[i]))


def mass(grid: Grid, u: np.ndarray) -> float:
    return float(np.sum(u) * grid.dx)


@dataclass
class RunResult:
    state: PdeState
    trace: FrontTrace
    diagnostics: dict
    snapshots: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.state, self.trace, self.diagnostics))


def run(params: ModelParams, initial: PdeState, bc=Boundary.DIRICHLET_ZERO, t_end: float = 1.0,
        observers: Sequence[float] | None = None, cfl: float = 0.25, method: str = "rkl2",
        threshold: float = 0.01, upwind: bool = True, keep_snapshots: bool = False,
        callback: Callable[[PdeState], None] | None = None) -> RunResult:
    """Advance ``initial`` to ``t_end`` and record diagnostics at observer times.

    Steps are shortened to land on every observer time.  At each observer
    time the front position (level ``threshold``), the mass and the
    integral of F(u) are recorded.

    ``method="ssprk2"`` uses the combined hyperbolic/parabolic step of
    :func:`step`.  ``method="rkl2"`` takes the hyperbolic step and covers
    the parabolic restriction with the number of RKL2 stages it needs.
    """
    if not t_end > initial.t:
        raise ValidationError(f"t_end={t_end} must exceed the initial time {initial.t}")
    if not 0 < cfl <= 0.5:
        raise ValidationError(f"cfl must lie in (0, 0.5], got {cfl}")
    if method not in ("rkl2", "ssprk2"):
        raise ValidationError(f"unknown time integrator {method!r}")
    bc = Boundary.parse(bc)
    grid = initial.grid
    obs = sorted({float(t) for t in (() if observers is None else observers) if initial.t < t <= t_end} | {float(t_end)})
    kind, p, q = _kind(params)
    neumann = bc is Boundary.NEUMANN_ZERO
    n, dx = grid.n_cells, grid.dx
    lip = lipschitz_constant(params)

    w = _pad(initial.u)
    work = [np.zeros_like(w) for _ in range(5)]
    trace = FrontTrace()
    diag = {"times": [], "mass": [], "reaction_integral": [], "front_alt": [],
            "n_steps": 0, "n_stages": 0, "method": method, "threshold": threshold,
            "u_max": []}
    snaps = {}

    def record(t):
        u = w[_GHOST:-_GHOST]
        trace.times.append(t)
        trace.positions.append(front_position(grid, u, threshold))
        diag["times"].append(t)
        diag["mass"].append(mass(grid, u))
        fu = u * (1.0 - u) if kind == 0 else u**p * (1.0 - u**q)
        diag["reaction_integral"].append(float(np.sum(fu) * dx))
        # sensitivity of the front location to the threshold level
        diag["front_alt"].append(front_position(grid, u, 2.0 * threshold))
        diag["u_max"].append(float(np.max(u)))
        if keep_snapshots:
            snaps[t] = u.copy()

    t = initial.t
    record(t)
    for t_obs in obs:
        while t < t_obs * (1.0 - 1e-14):
            u = w[_GHOST:-_GHOST]
            if method == "ssprk2":
                dt = min(time_step(params, grid, u, cfl, lip), t_obs - t)
                _ssprk2(w, work[0], work[1], dt, n, dx, params.nu, params.c, params.m,
                        kind, p, q, upwind, neumann)
                diag["n_stages"] += 2
            else:
                dt = min(_hyperbolic_step(params, grid, u, cfl, lip), t_obs - t)
                # forward-Euler parabolic limit, with a safety factor
                g = max(float(np.max(u)), 0.0) ** (params.m - 1.0)
                dt_par = 0.9 * dx * dx / (2.0 * params.nu * g + EPS_DT)
                s = _rkl2_stages(dt, dt_par)
                _rkl2(w, work[0], work[1], work[2], work[3], work[4], s, dt, n, dx,
                      params.nu, params.c, params.m, kind, p, q, upwind, neumann)
                diag["n_stages"] += s
            t += dt
            diag["n_steps"] += 1
            u = w[_GHOST:-_GHOST]
            _check(u, t)
            np.clip(u, 0.0, 1.0, out=u)
            if callback is not None:
                callback(PdeState(grid, u.copy(), t))
        t = t_obs
        record(t)

    trace.finalize()
    state = PdeState(grid, w[_GHOST:-_GHOST].copy(), t)
    return RunResult(state, trace, diag, snaps)


def _rkl2_stages(tau, dt_par):
    """Smallest s >= 2 with tau <= dt_par (s^2 + s - 2)/4."""
    if tau <= dt_par:
        return 2
    s = int(math.ceil(0.5 * (-1.0 + math.sqrt(9.0 + 16.0 * tau / dt_par))))
    while dt_par * (s * s + s - 2) / 4.0 < tau:
        s += 1
    return max(s, 2)


# ---------------------------------------------------------------------------
# initial data


def bump(grid: Grid, amplitude: float = 0.9, center: float = 0.0, half_width: float = 1.0) -> PdeState:
    """Compactly supported cos^2 bump of the given height."""
    x = grid.centers
    z = (x - center) / half_width
    u = np.where(np.abs(z) < 1.0, amplitude * np.cos(0.5 * np.pi * z) ** 2, 0.0)
    return PdeState(grid, u, 0.0)


def smooth_step(grid: Grid, position: float = 0.0, width: float = 1.0, high: float = 1.0) -> PdeState:
    """Monotone decreasing smooth step from ``high`` to 0, exactly zero right of position+width."""
    x = grid.centers
    z = np.clip((x - position) / width, 0.0, 1.0)
    u = high * 0.5 * (1.0 + np.cos(np.pi * z))
    return PdeState(grid, u, 0.0)


# ---------------------------------------------------------------------------
# L1 contraction


@dataclass
class StabilityReport:
    ratio: float
    passed: bool
    slack: float
    positive_part_max: float
    times: list
    ratios: list

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def l1_stability_check(params: ModelParams, run_a: RunResult, run_b: RunResult,
                       slack: float = 0.05) -> StabilityReport:
    """max_t ||u - v||_1 / (exp(L t) ||u0 - v0||_1) over shared snapshot times.

    Both runs must be made with ``keep_snapshots=True`` on the same grid and
    observer times.  ``positive_part_max`` is the largest ||(u - v)^+||_1,
    which stays near zero when the initial data are ordered u0 <= v0.
    """
    sa, sb = run_a.snapshots, run_b.snapshots
    if not sa or sorted(sa) != sorted(sb):
        raise ValidationError("runs must share snapshot times")
    if run_a.state.grid != run_b.state.grid:
        raise ValidationError("runs must share the grid")
    dx = run_a.state.grid.dx
    L = lipschitz_constant(params)
    times = sorted(sa)
    t0 = times[0]
    d0 = float(np.sum(np.abs(sa[t0] - sb[t0])) * dx)
    ratios, pos = [], 0.0
    for t in times:
        d = float(np.sum(np.abs(sa[t] - sb[t])) * dx)
        pos = max(pos, float(np.sum(np.maximum(sa[t] - sb[t], 0.0)) * dx))
        ratios.append(0.0 if d0 == 0.0 else d / (math.exp(L * (t - t0)) * d0))
    ratio = max(ratios)
    return StabilityReport(ratio, ratio <= 1.0 + slack, slack, pos, times, ratios)


def write_run_config(path: str | Path, grid: Grid, bc, cfl: float, t_end: float, initial: dict,
                     observers: Sequence[float]) -> None:
    doc = {"grid": grid.to_dict(), "bc": Boundary.parse(bc).value, "cfl": cfl, "t_end": t_end,
           "initial": initial, "observers": list(observers)}
    Path(path).write_text(json.dumps(doc, indent=2))


# ---------------------------------------------------------------------------
# comparison with traveling waves


def wave_threshold_point(wave, threshold: float = 0.01) -> float:
    """Largest xi at which the traveling wave still reaches ``threshold``."""
    if wave.kind != "Smooth" and wave.u_minus < threshold <= wave.u_plus:
        return 0.0
    lo, hi = wave.xi_range
    xi = np.linspace(lo, hi, 200001)
    u = wave.evaluate(xi)
    idx = np.flatnonzero(u >= threshold)
    if not len(idx):
        raise ValidationError("traveling wave never reaches the threshold")
    i = int(idx[-1])
    if i == len(xi) - 1:
        return float(xi[i])
    return float(xi[i] + (u[i] - threshold) / (u[i] - u[i + 1]) * (xi[i + 1] - xi[i]))


def compare_front(grid: Grid, u: np.ndarray, wave, threshold: float = 0.01,
                  window: float = 0.5, exclude_cells: int = 3) -> dict:
    """Discrepancy between a solution and a traveling wave aligned at the front.

    The wave is shifted so that both cross ``threshold`` at the same x.  The
    comparison covers the ``window`` trailing the front, without the last
    ``exclude_cells`` cells, which hold the numerical shock layer.
    """
    xf = front_position(grid, u, threshold)
    if not math.isfinite(xf):
        raise ValidationError("solution has no front above the threshold")
    shift = xf - wave_threshold_point(wave, threshold)
    x = grid.centers
    mask = (x >= xf - window) & (x < xf - exclude_cells * grid.dx)
    if not mask.any():
        raise ValidationError("comparison window contains no cells")
    tw = wave.evaluate(x[mask] - shift)
    d = np.abs(u[mask] - tw)
    return {
        "x_front": xf,
        "shift": shift,
        "window": [float(xf - window), float(xf - exclude_cells * grid.dx)],
        "sup": float(d.max()),
        "l1": float(d.sum() * grid.dx),
        "n_cells": int(mask.sum()),
    }
