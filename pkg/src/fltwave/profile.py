"""Assembly of normalized traveling-wave profiles from phase-plane orbits.

The profile family is normalized so that profiles for different speeds can
be compared pointwise:

* smooth waves (sigma > sigma_smooth) pass through u*(sigma_smooth) at xi=0;
* discontinuous waves jump from u+ to u- at xi=0;
* the half-line wave (sigma = sigma_ent) jumps from u+ to 0 at xi=0.

Along an orbit ``dxi/du = -(nu/c) sqrt(1-r^2)/(u r)``.  The orbit integrator
carries xi as a state component; :func:`xi_of_u` recomputes it by quadrature
of the interpolated graph r(u) and serves as an independent check.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar
from scipy.interpolate import PchipInterpolator

from .critical_speeds import CriticalSpeeds
from .errors import FitUnstable, QuadratureFailure, SpeedBelowEntropic
from .jump_matching import solve_u_minus
from .phase_plane import (
    IntegratorOptions,
    Orbit,
    _kfun,
    integrate_type3,
    launch_and_integrate,
    u_star,
)
from .reaction import ModelParams

__all__ = [
    "WaveProfile",
    "PROFILE_OPTIONS",
    "build_wave",
    "xi_of_u",
    "jump_asymptotics",
    "JumpAsymptotics",
    "wave_distance",
    "powerlaw_coefficient",
    "beta_amplitude",
]

SMOOTH = "Smooth"
CORNER = "ContinuousCorner"
DISCONTINUOUS = "Discontinuous"
HALFLINE = "HalfLine"

# tails reach 1 - 1e-8 on the left and 1e-7 on the right
PROFILE_OPTIONS = IntegratorOptions(launch_offset=1e-8, u_floor=1e-7)


@dataclass
class WaveProfile:
    sigma: float
    kind: str
    left_xi: np.ndarray
    left_u: np.ndarray
    right_xi: np.ndarray
    right_u: np.ndarray
    u_plus: float
    u_minus: float
    sigma_ent: float
    sigma_smooth: float
    normalization: str
    left_orbit: Orbit | None = field(default=None, repr=False)
    right_orbit: Orbit | None = field(default=None, repr=False)

    @property
    def xi_range(self) -> tuple[float, float]:
        hi = self.right_xi[-1] if len(self.right_xi) else max(self.left_xi[-1], 0.0)
        return float(self.left_xi[0]), float(hi)

    def _interp(self, which):
        key = f"_{which}_interp"
        f = self.__dict__.get(key)
        if f is None:
            xi = getattr(self, f"{which}_xi")
            u = getattr(self, f"{which}_u")
            f = PchipInterpolator(xi, u, extrapolate=False) if len(xi) > 1 else None
            self.__dict__[key] = f
        return f

    def evaluate(self, xi, side: str = "left"):
        """u at the given xi.  At xi=0 the ``side`` limit is returned.

        Outside the sampled window the tails are continued by their last
        sampled values (within 1e-7 of 1 and 0 respectively).
        """
        xi = np.asarray(xi, dtype=float)
        out = np.empty_like(xi)
        if self.kind == SMOOTH:
            f = self._interp("left")
            out[:] = f(np.clip(xi, self.left_xi[0], self.left_xi[-1]))
            return out
        on_left = (xi < 0) | ((xi == 0) & (side == "left"))
        fl = self._interp("left")
        out[on_left] = fl(np.clip(xi[on_left], self.left_xi[0], 0.0))
        rest = ~on_left
        if self.kind == HALFLINE or not len(self.right_xi):
            out[rest] = 0.0
        else:
            fr = self._interp("right")
            out[rest] = fr(np.clip(xi[rest], 0.0, self.right_xi[-1]))
        return out

    def rows(self) -> np.ndarray:
        """(xi, u) rows; a jump appears as two rows with the same xi."""
        if self.kind == SMOOTH:
            return np.column_stack([self.left_xi, self.left_u])
        parts = [np.column_stack([self.left_xi, self.left_u])]
        if self.kind == HALFLINE:
            parts.append(np.array([[0.0, 0.0]]))
        else:
            right = np.column_stack([self.right_xi, self.right_u])
            if self.kind == CORNER:
                right = right[1:]
            parts.append(right)
        return np.vstack(parts)

    def metadata(self) -> dict:
        return {
            "sigma": self.sigma,
            "kind": self.kind,
            "u_plus": self.u_plus,
            "u_minus": self.u_minus,
            "sigma_ent": self.sigma_ent,
            "sigma_smooth": self.sigma_smooth,
            "normalization": self.normalization,
        }

    def export(self, path_csv: str | Path, path_json: str | Path | None = None) -> None:
        path_csv = Path(path_csv)
        np.savetxt(path_csv, self.rows(), delimiter=",", header="xi,u", comments="", fmt="%.15g")
        if path_json is None:
            path_json = path_csv.with_suffix(".json")
        Path(path_json).write_text(json.dumps(self.metadata(), indent=2))


def _classify_speed(sigma, crit: CriticalSpeeds, kind_tol):
    if sigma < crit.sigma_ent - kind_tol:
        raise SpeedBelowEntropic(
            f"sigma={sigma} is below sigma_ent={crit.sigma_ent}: no entropic traveling wave")
    if abs(sigma - crit.sigma_ent) <= kind_tol:
        return HALFLINE
    if abs(sigma - crit.sigma_smooth) <= kind_tol:
        return CORNER
    return SMOOTH if sigma > crit.sigma_smooth else DISCONTINUOUS


def _left_from_type2(orbit: Orbit, u_cut: float):
    """Left branch ending at ``u_cut``; grazing orbits run past it and are trimmed."""
    u, xi = orbit.u, orbit.xi
    if u[-1] < u_cut:
        keep = u > u_cut
        xi_cut = float(orbit.xi_of_u_raw(u_cut))
        u = np.append(u[keep], u_cut)
        xi = np.append(xi[keep], xi_cut)
    return xi - xi[-1], u


def build_wave(params: ModelParams, sigma: float, crit: CriticalSpeeds,
               opts: IntegratorOptions | None = None, kind_tol: float | None = None) -> WaveProfile:
    """Normalized traveling wave for ``sigma >= sigma_ent``."""
    opts = opts or PROFILE_OPTIONS
    if kind_tol is None:
        kind_tol = max(10.0 * crit.tol, 1e-9)
    kind = _classify_speed(sigma, crit, kind_tol)
    u_anchor = u_star(params, crit.sigma_smooth)
    common = dict(sigma=sigma, sigma_ent=crit.sigma_ent, sigma_smooth=crit.sigma_smooth)
    empty = np.empty(0)

    if kind == SMOOTH:
        orbit = launch_and_integrate(params, sigma, opts)
        if orbit.variant != "I":
            raise SpeedBelowEntropic(f"expected a Type I orbit at sigma={sigma}, got {orbit.variant}")
        xi0 = float(orbit.xi_of_u_raw(u_anchor))
        return WaveProfile(kind=kind, left_xi=orbit.xi - xi0, left_u=orbit.u, right_xi=empty,
                           right_u=empty, u_plus=u_anchor, u_minus=u_anchor,
                           normalization="u(0)=u*(sigma_smooth)", left_orbit=orbit, **common)

    if kind == CORNER:
        # the lower bisection bound is certified Type II
        s_left = crit.sigma_smooth_lower if math.isfinite(crit.sigma_smooth_lower) else sigma
        orbit = launch_and_integrate(params, s_left, opts)
        us = u_star(params, sigma)
        left_xi, left_u = _left_from_type2(orbit, us)
        right = integrate_type3(params, sigma, us, opts)
        return WaveProfile(kind=kind, left_xi=left_xi, left_u=left_u,
                           right_xi=right.xi - right.xi[0], right_u=right.u,
                           u_plus=us, u_minus=us, normalization="u(0)=u*(sigma_smooth)",
                           left_orbit=orbit, right_orbit=right, **common)

    orbit = launch_and_integrate(params, sigma, opts)
    if orbit.variant != "II":
        raise SpeedBelowEntropic(f"expected a Type II orbit at sigma={sigma}")
    up = orbit.orbit_class.value
    left_xi, left_u = _left_from_type2(orbit, up)
    if kind == HALFLINE:
        return WaveProfile(kind=kind, left_xi=left_xi, left_u=left_u, right_xi=empty,
                           right_u=empty, u_plus=up, u_minus=0.0,
                           normalization="u(0-)=u+, u=0 for xi>0", left_orbit=orbit, **common)
    um = solve_u_minus(params, sigma, up)
    right = integrate_type3(params, sigma, um, opts)
    return WaveProfile(kind=kind, left_xi=left_xi, left_u=left_u,
                       right_xi=right.xi - right.xi[0], right_u=right.u, u_plus=up,
                       u_minus=um, normalization="u(0-)=u+, u(0+)=u-", left_orbit=orbit,
                       right_orbit=right, **common)


# ---------------------------------------------------------------------------
# xi by quadrature


def xi_of_u(params: ModelParams, sigma: float, orbit: Orbit, u: float,
            anchor: float | None = None) -> float:
    """xi(u) = -(nu/c) * integral_anchor^u sqrt(1-r^2)/(v r) dv on the orbit graph.

    The anchor defaults to the orbit's r=1 end (u+ for Type II, u- for Type
    III) and must be given for Type I orbits.  When the anchor sits on r=1,
    the panel next to it is integrated after the substitution
    ``v = anchor ± w^2``, which removes the square-root behaviour there.
    """
    lo, hi = float(orbit.u[-1]), float(orbit.u[0])
    if anchor is None:
        if orbit.variant == "II":
            anchor = lo
        elif orbit.variant == "III":
            anchor = hi
        else:
            raise QuadratureFailure("Type I orbits need an explicit anchor")
    if not (lo <= u <= hi and lo <= anchor <= hi):
        raise QuadratureFailure(f"u={u} or anchor={anchor} outside the orbit range [{lo}, {hi}]")
    if u == anchor:
        return 0.0

    def integrand(v):
        r = float(orbit.r_of_u(v))
        if not math.isfinite(r) or r <= 0.0:
            raise QuadratureFailure(f"graph r(u) unusable at u={v}")
        s = math.sqrt(max(1.0 - r * r, 0.0))
        return s / (v * r)

    on_edge = float(orbit.r_of_u(anchor)) >= 1.0 - 1e-12
    total = 0.0
    a, b = anchor, u
    if on_edge:
        sign = 1.0 if u > anchor else -1.0
        h = min(abs(u - anchor), 0.05)
        w_max = math.sqrt(h)
        val, err = quad(lambda w: integrand(anchor + sign * w * w) * 2.0 * w, 0.0, w_max,
                        limit=200, epsabs=1e-12, epsrel=1e-9)
        total += sign * val
        a = anchor + sign * h
    if a != b:
        val, err = quad(integrand, a, b, limit=400, epsabs=1e-12, epsrel=1e-9)
        if not math.isfinite(val):
            raise QuadratureFailure(f"quadrature diverged between {a} and {b}")
        total += val
    return -(params.nu / params.c) * total


# ---------------------------------------------------------------------------
# behaviour at the junction


def beta_amplitude(params: ModelParams, sigma: float, u_side: float) -> float:
    """Amplitude of |u - u_side| ~ beta |xi|^(2/3) next to a vertical contact."""
    c, m, nu = params.c, params.m, params.nu
    gap = abs(m * c - sigma * u_side ** (1.0 - m))
    if gap == 0.0:
        return math.inf
    return (3.0 * (c * u_side) ** 1.5 / (2.0 * math.sqrt(2.0) * nu * math.sqrt(gap))) ** (2.0 / 3.0)


def powerlaw_coefficient(params: ModelParams, sigma: float) -> float:
    """Left amplitude of the half-line wave: 1/2 (3c/(nu sqrt(m-1)))^(2/3) (sigma/c)^(1/(m-1))."""
    c, m, nu = params.c, params.m, params.nu
    return 0.5 * (3.0 * c / (nu * math.sqrt(m - 1.0))) ** (2.0 / 3.0) * (sigma / c) ** (1.0 / (m - 1.0))


def _corner_amplitude(params, sigma, side):
    """|u - u*| ~ a |xi|^(1/2) at the bouncing point (saddle of the s-chart field)."""
    c, m, nu = params.c, params.m, params.nu
    us = u_star(params, sigma)
    K = _kfun(params)
    a = (m / us**2) * (m - 1.0)
    b = K(us) * nu / (c * c * us**m)
    root = math.sqrt(b * b + 4.0 * a)
    lam = 0.5 * (-b - root) if side == "left" else 0.5 * (-b + root)
    return math.sqrt(2.0 * us * c / (nu * abs(lam)))


@dataclass
class JumpAsymptotics:
    exponent_left: float
    coeff_left: float
    exponent_right: float
    coeff_right: float
    expected_exponent: float
    expected_coeff_left: float
    expected_coeff_right: float
    n_left: int = 0
    n_right: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _junction_time(orbit: Orbit, at_end: bool, u_anchor: float):
    """s-chart segment and time where the orbit meets (u_anchor, r=1).

    A departing orbit starts there.  An arriving orbit either ends there or,
    when it grazes the bouncing point, passes closest to it mid-segment.
    """
    if not at_end:
        seg = orbit.segments[0]
        if seg.chart != "s":
            raise FitUnstable("no s-chart segment at the junction")
        return seg, seg.t0
    best = None
    for seg in orbit.segments:
        if seg.chart != "s":
            continue
        tt = np.linspace(seg.t0, seg.t1, 2001)
        y = seg.sol(tt)
        d = np.hypot(y[0] - u_anchor, y[1])
        k = int(np.argmin(d))
        if best is None or d[k] < best[0]:
            best = (d[k], seg, tt, k)
    if best is None:
        raise FitUnstable("no s-chart segment at the junction")
    _, seg, tt, k = best
    if 0 < k < len(tt) - 1:
        res = minimize_scalar(lambda t: float(np.hypot(seg.sol(t)[0] - u_anchor, seg.sol(t)[1])),
                              bounds=(tt[k - 1], tt[k + 1]), method="bounded",
                              options={"xatol": 1e-14 * max(1.0, abs(tt[k]))})
        return seg, float(res.x)
    return seg, float(tt[k])


def _near_anchor_samples(orbit: Orbit, at_end: bool, u_anchor: float, n: int = 400):
    """(|xi - xi_anchor|, |u - u_anchor|) from the dense s-chart output next to the junction."""
    seg, t_ref = _junction_time(orbit, at_end, u_anchor)
    span = t_ref - seg.t0 if at_end else seg.t1 - t_ref
    # geometric spacing resolves escape points, uniform spacing the slow saddle approach
    d = np.union1d(np.geomspace(span * 1e-7, span, n), np.linspace(0.0, span, 10 * n)[1:])
    tt = t_ref - d if at_end else t_ref + d
    y = seg.sol(tt)
    return np.abs(y[2] - seg.sol(t_ref)[2]), np.abs(y[0] - u_anchor)


def _loglog_fit(dxi, du, lo, hi, pinned):
    """Free log-log slope, plus the amplitude with the exponent pinned to ``pinned``.

    Pinning keeps the amplitude from inheriting the slope error through an
    extrapolation of the intercept to |xi| = 1.
    """
    mask = (dxi >= lo) & (dxi <= hi) & (du > 0)
    if mask.sum() < 20:
        raise FitUnstable(f"only {int(mask.sum())} samples in the fit window [{lo}, {hi}]")
    x, y = np.log(dxi[mask]), np.log(du[mask])
    slope = np.polyfit(x, y, 1)[0]
    amp = math.exp(float(np.mean(y - pinned * x)))
    return float(slope), amp, int(mask.sum())


def jump_asymptotics(params: ModelParams, sigma: float, wave: WaveProfile,
                     window: tuple[float, float] = (1e-6, 1e-3)) -> JumpAsymptotics:
    """Log-log fit of |u - u_±| against |xi| on each side of the junction.

    Amplitudes are measured with the exponent fixed at its analytic value.

    Vertical contacts off the bouncing point follow the 2/3 law; at the
    bouncing point itself (continuous corner) the approach is a square root.
    Fitted values come with their analytic references.
    """
    if wave.kind not in (DISCONTINUOUS, HALFLINE, CORNER):
        raise FitUnstable(f"no junction on a {wave.kind} wave")
    lo, hi = window
    expo = 0.5 if wave.kind == CORNER else 2.0 / 3.0
    dxi, du = _near_anchor_samples(wave.left_orbit, True, wave.u_plus)
    el, cl, nl = _loglog_fit(dxi, du, lo, hi, expo)
    if wave.kind == HALFLINE:
        er, cr, nr = float("nan"), float("nan"), 0
    else:
        dxi_r, du_r = _near_anchor_samples(wave.right_orbit, False, wave.u_minus)
        er, cr, nr = _loglog_fit(dxi_r, du_r, lo, hi, expo)
    if wave.kind == CORNER:
        ref_l = _corner_amplitude(params, sigma, "left")
        ref_r = _corner_amplitude(params, sigma, "right")
    else:
        ref_l = beta_amplitude(params, sigma, wave.u_plus)
        ref_r = beta_amplitude(params, sigma, wave.u_minus) if wave.kind != HALFLINE else float("nan")
    return JumpAsymptotics(el, cl, er, cr, expo, ref_l, ref_r, nl, nr)


# ---------------------------------------------------------------------------
# distances


def wave_distance(w1: WaveProfile, w2: WaveProfile, p: float = 1.0,
                  xi_max: float | None = None, n: int = 40001) -> tuple[float, float]:
    """Discrete L^p and sup distances on the truncated window [-xi_max, xi_max].

    Both profiles are resampled at cell midpoints of a uniform grid; the
    one-sided limits at the junction enter the sup distance.  Tails outside
    each profile's sampled window are continued by constants.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if xi_max is None:
        xi_max = max(abs(w1.xi_range[0]), abs(w2.xi_range[0]), w1.xi_range[1], w2.xi_range[1])
    edges = np.linspace(-xi_max, xi_max, n)
    mid = 0.5 * (edges[1:] + edges[:-1])
    h = edges[1] - edges[0]
    d = np.abs(w1.evaluate(mid) - w2.evaluate(mid))
    lp = float((np.sum(d**p) * h) ** (1.0 / p))
    sup = float(np.max(d))
    for side in ("left", "right"):
        a = w1.evaluate(np.array([0.0]), side)[0]
        b = w2.evaluate(np.array([0.0]), side)[0]
        sup = max(sup, float(abs(a - b)))
    return lp, sup
