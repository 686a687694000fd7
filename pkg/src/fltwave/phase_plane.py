"""Phase-plane orbits of the traveling-wave system in graph form r(u).

A decreasing wave profile u(xi) is encoded by the normalized slope

    r = -(nu/c) u' / sqrt(u^2 + (nu/c)^2 u'^2)  in [0, 1],

and along an orbit r is a function of u obeying

    dr/du = sigma/(c u^m) - m r/u - (K(u)/u^m) (nu/c^2) sqrt(1-r^2)/r.

Two charts are used.

* r-chart: independent variable ``l = ln u`` (decreasing), state ``(r, xi)``.
  Used while ``r <= switch_r``.  Below ``u_stiff`` the attraction towards
  ``(0, r*)`` makes the problem stiff and an implicit method takes over.
* s-chart: ``s = sqrt(1 - r^2)`` with the desingularized field
  ``du/dtau = -s, ds/dtau = -D(u, s)`` where ``D = s ds/du``.  The field is
  smooth across ``s = 0``, so the escape point u+ of a Type II orbit is a
  transversal zero of ``s`` and the bouncing point (u*, 1) is a saddle.

``xi`` is carried as an extra state component, ``dxi/du = -(nu/c)
sqrt(1-r^2)/(u r)``, which gives the wave parametrization for free.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, NonConvergence, StiffnessFailure
from .reaction import K_at_0, K_prime_at_1, ModelParams

__all__ = [
    "IntegratorOptions",
    "OrbitClass",
    "Orbit",
    "u_star",
    "r_star",
    "lambda_sigma",
    "graph_rhs",
    "launch_and_integrate",
    "integrate_type3",
    "classify",
]


@dataclass(frozen=True)
class IntegratorOptions:
    launch_offset: float = 1e-6
    rtol: float = 1e-10
    atol: float = 1e-12
    switch_r: float = 0.99
    u_floor: float = 1e-6
    # below this u the r-chart is integrated with Radau
    u_stiff: float = 0.05
    graze_tol: float = 1e-6
    max_steps: int = 200_000
    # stop as soon as the Type I/II question is settled (no tail, no xi)
    classify_only: bool = False
    # sub-samples per accepted step taken from the dense output
    refine: int = 4

    @property
    def switch_s(self) -> float:
        return math.sqrt(1.0 - self.switch_r**2)


@dataclass(frozen=True)
class OrbitClass:
    """Type I (``value`` = r limit), II (escape u+) or III (departure u-)."""

    variant: str
    value: float
    grazing: bool = False

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "grazing", bool(self.grazing))

    def to_dict(self) -> dict:
        key = {"I": "r_limit", "II": "u_plus", "III": "u_minus"}[self.variant]
        return {"class": f"Type{self.variant}", key: self.value, "grazing": self.grazing}


@dataclass
class _Segment:
    chart: str  # "r" or "s"
    sol: Callable  # dense output
    t0: float
    t1: float


@dataclass
class Orbit:
    sigma: float
    u: np.ndarray
    r: np.ndarray
    xi: np.ndarray
    orbit_class: OrbitClass
    launch_offset: float
    n_steps: int = 0
    s_min: float = float("nan")
    segments: list = field(default_factory=list, repr=False)

    @property
    def variant(self) -> str:
        return self.orbit_class.variant

    def r_of_u(self, u):
        """Monotone cubic interpolation of the sampled graph r(u)."""
        interp = getattr(self, "_r_interp", None)
        if interp is None:
            interp = PchipInterpolator(self.u[::-1], self.r[::-1], extrapolate=False)
            self._r_interp = interp
        return interp(u)

    def xi_of_u_raw(self, u):
        """xi relative to this orbit's own origin, by interpolation."""
        interp = getattr(self, "_xi_interp", None)
        if interp is None:
            interp = PchipInterpolator(self.u[::-1], self.xi[::-1], extrapolate=False)
            self._xi_interp = interp
        return interp(u)

    def export(self, path_csv: str | Path, path_json: str | Path | None = None) -> None:
        """CSV ``u,r`` plus a JSON sidecar describing the orbit."""
        path_csv = Path(path_csv)
        np.savetxt(path_csv, np.column_stack([self.u, self.r]), delimiter=",",
                   header="u,r", comments="", fmt="%.15g")
        if path_json is None:
            path_json = path_csv.with_suffix(".json")
        meta = {"sigma": self.sigma, "launch_offset": self.launch_offset, "n_steps": self.n_steps}
        meta.update(self.orbit_class.to_dict())
        Path(path_json).write_text(json.dumps(meta, indent=2))


# ---------------------------------------------------------------------------
# closed-form landmarks


def u_star(params: ModelParams, sigma: float) -> float:
    """Bouncing point on r=1 where the graph slope vanishes."""
    if sigma < 0:
        raise DomainError("sigma must be non-negative")
    return (sigma / (params.c * params.m)) ** (1.0 / (params.m - 1.0))


def r_star(params: ModelParams, sigma: float) -> float:
    """Limit of r as u -> 0 along Type I/III orbits."""
    if sigma <= 0:
        raise DomainError("r* is only defined for sigma > 0")
    a = params.nu * K_at_0(params) / (params.c * sigma)
    return a / math.sqrt(1.0 + a * a)


def lambda_sigma(params: ModelParams, sigma: float) -> float:
    """Slope dr/du at (1, 0) along the unstable manifold."""
    k1 = K_prime_at_1(params)
    nu = params.nu
    return (2.0 * nu * k1 / (sigma + math.sqrt(sigma * sigma - 4.0 * k1 * nu))) / params.c


def graph_rhs(params: ModelParams, sigma: float, u: float, r: float) -> float:
    if not (0.0 < u < 1.0) or not (0.0 < r < 1.0):
        raise DomainError(f"graph_rhs needs interior (u, r), got ({u}, {r})")
    return _drdu(params, sigma, u, r, math.sqrt(1.0 - r * r))


# ---------------------------------------------------------------------------
# vector fields


def _kfun(params: ModelParams) -> Callable[[float], float]:
    spec = params.reaction
    if spec.kind == "fkpp":
        return lambda u: 1.0 - u
    p, q = spec.p, spec.q
    k0 = K_at_0(params)
    return lambda u: u ** (p - 1.0) * (1.0 - u**q) if u > 0 else k0


def _drdu(params, sigma, u, r, s, K=None):
    if K is None:
        K = _kfun(params)
    c, m, nu = params.c, params.m, params.nu
    um = u**m
    return sigma / (c * um) - m * r / u - K(u) / um * (nu / (c * c)) * s / r


def _D(params, sigma, K, u, s):
    """s * ds/du; positive where s decreases with u."""
    c, m, nu = params.c, params.m, params.nu
    r = math.sqrt(max(1.0 - s * s, 0.0))
    um = u**m
    return m * r * r / u - sigma * r / (c * um) + K(u) * nu * s / (c * c * um)


def _make_r_chart(params, sigma):
    K = _kfun(params)
    c, m, nu = params.c, params.m, params.nu
    k = nu / (c * c)
    xi_fac = nu / c

    def rhs(l, y):
        u = math.exp(l)
        r = y[0]
        if r <= 0.0:
            r = 1e-300
        s2 = 1.0 - r * r
        s = math.sqrt(s2) if s2 > 0 else 0.0
        um1 = u ** (m - 1.0)
        # u * dr/du
        drdl = sigma / (c * um1) - m * r - K(u) / um1 * k * s / r
        return [drdl, -xi_fac * s / r]

    return rhs


def _make_s_chart(params, sigma):
    K = _kfun(params)
    xi_fac = params.nu / params.c

    def rhs(t, y):
        u, s = y[0], y[1]
        if u <= 0:
            return [0.0, 0.0, 0.0]
        r = math.sqrt(max(1.0 - s * s, 0.0))
        return [-s, -_D(params, sigma, K, u, s), xi_fac * s * s / (u * r)]

    return rhs


def _sample(sol, t, refine):
    """Step points plus ``refine`` interior points per step, from dense output."""
    t = np.asarray(t)
    if refine <= 0 or len(t) < 2:
        return t, sol(t)
    frac = np.arange(refine + 1) / (refine + 1)
    tt = (t[:-1, None] + np.diff(t)[:, None] * frac[None, :]).ravel()
    tt = np.append(tt, t[-1])
    return tt, sol(tt)


# ---------------------------------------------------------------------------
# drivers


class _Builder:
    """Accumulates samples across chart switches."""

    def __init__(self, params, sigma, opts):
        self.params = params
        self.sigma = sigma
        self.opts = opts
        self.u: list[np.ndarray] = []
        self.r: list[np.ndarray] = []
        self.xi: list[np.ndarray] = []
        self.segments: list[_Segment] = []
        self.n_steps = 0
        self.s_min = math.inf
        # closest approach to the bouncing point (u*, 1)
        self.closest = math.inf
        self.ustar = u_star(params, sigma) if sigma > 0 else 0.0

    def add(self, u, r, xi):
        u, r, xi = map(np.atleast_1d, (u, r, xi))
        if self.u:
            # drop points already covered (chart junctions duplicate a sample)
            keep = u < self.u[-1][-1]
            u, r, xi = u[keep], r[keep], xi[keep]
        self.u.append(u)
        self.r.append(r)
        self.xi.append(xi)

    def _approach(self, u, s):
        s2 = np.asarray(s) ** 2
        gap_r = s2 / (1.0 + np.sqrt(np.clip(1.0 - s2, 0.0, 1.0)))
        d = np.hypot(np.asarray(u) - self.ustar, gap_r)
        if d.size:
            self.closest = min(self.closest, float(np.min(d)))

    def check_budget(self):
        if self.n_steps > self.opts.max_steps:
            raise NonConvergence(f"orbit at sigma={self.sigma} exceeded {self.opts.max_steps} steps")

    # --- r-chart -------------------------------------------------------
    def run_r(self, u0, r0, xi0, u_stop=None):
        """Integrate in the r-chart from (u0, r0).

        Returns ("switch", u, r, xi) when r reaches switch_r, ("floor", ...)
        at the floor, ("settled", ...) in classify mode once u < u*.
        """
        p, o, sigma = self.params, self.opts, self.sigma
        rhs = _make_r_chart(p, sigma)
        ustar = u_star(p, sigma) if sigma > 0 else 0.0

        def hit_switch(l, y):
            return y[0] - o.switch_r

        hit_switch.terminal = True
        hit_switch.direction = 1

        def below_ustar(l, y):
            return l - math.log(ustar) if ustar > 0 else 1.0

        below_ustar.terminal = True
        below_ustar.direction = -1

        l_floor = math.log(o.u_floor if u_stop is None else u_stop)
        l_stiff = math.log(o.u_stiff)
        l0 = math.log(u0)
        y = [r0, xi0]
        events = [hit_switch]
        if o.classify_only and 0 < ustar < 1:
            events.append(below_ustar)

        stages = []
        if l0 > l_stiff > l_floor:
            stages = [(l0, l_stiff, "DOP853"), (l_stiff, l_floor, "Radau")]
        elif l0 > l_floor:
            stages = [(l0, l_floor, "Radau" if l0 <= l_stiff else "DOP853")]
        else:
            return ("floor", u0, r0, xi0)

        for la, lb, method in stages:
            if o.classify_only and method == "Radau" and ustar > 0 and math.exp(la) < ustar:
                return ("settled", math.exp(la), y[0], y[1])
            first = o.launch_offset if u0 > 1.0 - 10.0 * o.launch_offset else None
            sol = solve_ivp(rhs, (la, lb), y, method=method, rtol=o.rtol, atol=o.atol,
                            events=events, dense_output=True,
                            first_step=first if method == "DOP853" else None)
            self.n_steps += len(sol.t)
            self.check_budget()
            if sol.status == -1:
                raise StiffnessFailure(f"r-chart integration failed at sigma={sigma}: {sol.message}")
            tt, yy = _sample(sol.sol, sol.t, o.refine)
            self.add(np.exp(tt), yy[0], yy[1])
            self.segments.append(_Segment("r", sol.sol, la, sol.t[-1]))
            for k, tag in ((0, "switch"), (1, "settled")):
                if k < len(sol.t_events) and len(sol.t_events[k]):
                    le = sol.t_events[k][0]
                    ye = sol.y_events[k][0]
                    return (tag, math.exp(le), ye[0], ye[1])
            y = sol.y[:, -1]
        return ("floor", math.exp(l_floor), y[0], y[1])

    # --- s-chart -------------------------------------------------------
    def run_s(self, u0, s0, xi0):
        """Integrate the desingularized field from (u0, s0).

        Returns ("escape", u, 0, xi) when s hits 0, ("switch", u, r, xi)
        when s climbs back above switch_s, ("floor", ...) at the floor.
        """
        p, o, sigma = self.params, self.opts, self.sigma
        K = _kfun(p)
        rhs = _make_s_chart(p, sigma)
        s_sw = o.switch_s

        def escape(t, y):
            return y[1]

        escape.terminal = True
        escape.direction = -1

        def leave(t, y):
            return y[1] - s_sw

        leave.terminal = True
        leave.direction = 1

        def floor(t, y):
            return y[0] - o.u_floor

        floor.terminal = True
        floor.direction = -1

        def turning(t, y):
            return _D(p, sigma, K, y[0], y[1])

        turning.terminal = False
        turning.direction = 0

        y = [u0, s0, xi0]
        t0 = 0.0
        # the field slows down near the saddle (u*, 0); extend the span if needed
        span = 50.0
        for _ in range(40):
            sol = solve_ivp(rhs, (t0, t0 + span), y, method="DOP853", rtol=o.rtol,
                            atol=o.atol, events=[escape, leave, floor, turning],
                            dense_output=True)
            self.n_steps += len(sol.t)
            self.check_budget()
            if sol.status == -1:
                raise StiffnessFailure(f"s-chart integration failed at sigma={sigma}: {sol.message}")
            tt, yy = _sample(sol.sol, sol.t, o.refine)
            r = np.sqrt(np.clip(1.0 - yy[1] ** 2, 0.0, 1.0))
            self.add(yy[0], r, yy[2])
            self.segments.append(_Segment("s", sol.sol, t0, sol.t[-1]))
            self.s_min = min(self.s_min, float(np.min(yy[1])))
            self._approach(yy[0], yy[1])
            if len(sol.t_events[3]):
                ye = sol.y_events[3]
                self.s_min = min(self.s_min, float(np.min(ye[:, 1])))
                self._approach(ye[:, 0], ye[:, 1])
            for k, tag in ((0, "escape"), (1, "switch"), (2, "floor")):
                if len(sol.t_events[k]):
                    ye = sol.y_events[k][0]
                    r_e = math.sqrt(max(1.0 - ye[1] ** 2, 0.0))
                    if tag == "escape":
                        # pin the terminal sample exactly on r = 1
                        self.u[-1][-1] = ye[0]
                        self.r[-1][-1] = 1.0
                    return (tag, ye[0], r_e, ye[2])
            t0 = sol.t[-1]
            y = sol.y[:, -1]
        raise NonConvergence(f"s-chart did not settle at sigma={sigma}")

    def finish(self, orbit_class, launch_offset):
        u = np.concatenate(self.u)
        r = np.concatenate(self.r)
        xi = np.concatenate(self.xi)
        keep = _strictly_monotone(u, xi)
        u, r, xi = u[keep], r[keep], xi[keep]
        return Orbit(self.sigma, u, r, xi, orbit_class, launch_offset, self.n_steps,
                     self.s_min, self.segments)


def _strictly_monotone(u, xi, gap=1e-13):
    """Mask keeping u strictly decreasing and xi strictly increasing.

    Scanned from the end so the terminal sample (pinned on r=1 at an
    escape) always survives; near-duplicates from chart junctions or slow
    passages by the saddle are dropped.
    """
    keep = np.zeros(len(u), dtype=bool)
    if not len(u):
        return keep
    keep[-1] = True
    un, xn = u[-1], xi[-1]
    for i in range(len(u) - 2, -1, -1):
        if u[i] > un + gap and xi[i] < xn - gap:
            keep[i] = True
            un, xn = u[i], xi[i]
    return keep


def _continue(b: _Builder, state, start_chart: str):
    """Alternate charts until the orbit settles; returns the final event."""
    o = b.opts
    chart = start_chart
    for _ in range(16):
        tag, u, rr, xi = state
        if chart == "r":
            ev = b.run_r(u, rr, xi)
            if ev[0] == "switch":
                chart = "s"
                state = (ev[0], ev[1], math.sqrt(1.0 - ev[2] ** 2), ev[3])
                continue
            return ev
        else:
            ev = b.run_s(u, rr, xi)
            if ev[0] == "switch":
                chart = "r"
                state = ev
                continue
            return ev
    raise NonConvergence(f"too many chart switches at sigma={b.sigma}")


def launch_and_integrate(params: ModelParams, sigma: float,
                         opts: IntegratorOptions | None = None) -> Orbit:
    """Follow the unstable manifold of (1, 0) until the orbit is classified.

    Type II: the orbit leaves through r=1 at ``u_plus``.  Type I: it reaches
    ``u_floor`` and the r-limit at u -> 0 is recorded.
    """
    if sigma < 0:
        raise DomainError("sigma must be non-negative")
    opts = opts or IntegratorOptions()
    eps = opts.launch_offset
    lam = lambda_sigma(params, sigma)
    b = _Builder(params, sigma, opts)
    u0, r0 = 1.0 - eps, -lam * eps
    b.add(np.array([u0]), np.array([r0]), np.array([0.0]))
    ev = _continue(b, ("start", u0, r0, 0.0), "r")
    tag, u_end, r_end, _ = ev
    ustar = u_star(params, sigma)
    if tag == "escape":
        grazing = abs(u_end - ustar) <= opts.graze_tol
        cls = OrbitClass("II", ustar if grazing else u_end, grazing)
    elif tag == "settled":
        cls = _maybe_grazing(b, params, sigma, opts, OrbitClass("I", float("nan")))
    else:
        cls = _maybe_grazing(b, params, sigma, opts, OrbitClass("I", _r_limit(b, params, sigma)))
    return b.finish(cls, eps)


def _maybe_grazing(b, params, sigma, opts, cls):
    # an orbit skimming the bouncing point counts as the limiting Type II orbit
    if b.closest <= opts.graze_tol:
        return OrbitClass("II", u_star(params, sigma), True)
    return cls


def _r_limit(b: _Builder, params, sigma) -> float:
    """Linear extrapolation in u of the last samples to u = 0."""
    u = np.concatenate(b.u[-1:])
    r = np.concatenate(b.r[-1:])
    if len(u) < 2:
        return float(r[-1])
    u1, u2, r1, r2 = u[-2], u[-1], r[-2], r[-1]
    if u1 == u2:
        return float(r2)
    return float(r2 - (r1 - r2) / (u1 - u2) * u2)


def classify(params: ModelParams, sigma: float, opts: IntegratorOptions | None = None) -> OrbitClass:
    """Type I/II classification only; stops as soon as the answer is settled."""
    opts = replace(opts or IntegratorOptions(), classify_only=True, refine=0)
    return launch_and_integrate(params, sigma, opts).orbit_class


def integrate_type3(params: ModelParams, sigma: float, u_minus: float,
                    opts: IntegratorOptions | None = None, launch_offset: float = 1e-7) -> Orbit:
    """Orbit departing from (u_minus, 1) and running down to u_floor.

    At the bouncing point u_minus = u* the departure follows the unstable
    eigendirection of the desingularized saddle, offset by ``launch_offset``.
    """
    opts = opts or IntegratorOptions()
    if sigma <= 0:
        raise DomainError("Type III orbits need sigma > 0")
    ustar = u_star(params, sigma)
    if not (0.0 < u_minus <= ustar * (1.0 + 1e-9)):
        raise DomainError(f"u_minus={u_minus} must lie in (0, u*={ustar}]")
    b = _Builder(params, sigma, opts)
    if abs(u_minus - ustar) <= 1e-9 * max(ustar, 1e-300):
        u0, s0, xi0 = _saddle_departure(params, sigma, launch_offset)
        b.add(np.array([ustar]), np.array([1.0]), np.array([0.0]))
        u_minus = ustar
    else:
        u0, s0, xi0 = u_minus, 0.0, 0.0
    ev = _continue(b, ("start", u0, s0, xi0), "s")
    if ev[0] == "escape":
        raise NonConvergence(f"Type III orbit from u-={u_minus} returned to r=1")
    orbit = b.finish(OrbitClass("III", u_minus), launch_offset)
    return orbit


def _saddle_departure(params, sigma, delta):
    """Point on the unstable manifold of (u*, s=0) for the field (-s, -D)."""
    c, m, nu = params.c, params.m, params.nu
    us = u_star(params, sigma)
    K = _kfun(params)
    a = (m / us**2) * (m - 1.0)  # dA/du at u*
    bb = K(us) * nu / (c * c * us**m)  # dD/ds at (u*, 0)
    lam = 0.5 * (-bb + math.sqrt(bb * bb + 4.0 * a))
    # eigenvector (x, s) = (-1, lam); xi to first order: dxi/ds = (nu/c) s/(u lam)
    x, s = -delta, lam * delta
    xi = 0.5 * (nu / c) * s * s / (us * lam)
    return us + x, s, xi
