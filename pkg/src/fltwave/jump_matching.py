"""Rankine-Hugoniot algebra for jumps of the flux-limited equation.

A jump from ``u+`` (left) to ``u-`` (right) moves with speed

    v = c (u+^m - u-^m) / (u+ - u-) = c psi(u+, u-),

and is entropic only if the profile is vertical on both sides (on the left
side only when the right state is zero).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

from .errors import DomainError, NoAdmissibleJump
from .reaction import ModelParams

__all__ = [
    "Vertical",
    "JumpPair",
    "JumpReport",
    "psi",
    "dpsi_dx",
    "solve_u_minus",
    "rh_speed",
    "jump_pair",
    "check_entropy_jump",
]


class Vertical(enum.Enum):
    """Infinite one-sided slope, kept symbolic."""

    DOWN = "-inf"
    UP = "+inf"


def _as_slope(slope):
    if isinstance(slope, Vertical):
        return slope
    if isinstance(slope, str) and slope in ("-inf", "+inf", "inf"):
        return Vertical.DOWN if slope == "-inf" else Vertical.UP
    slope = float(slope)
    if math.isinf(slope):
        return Vertical.DOWN if slope < 0 else Vertical.UP
    return slope


def psi(m: float, u_plus: float, x: float) -> float:
    """(u+^m - x^m)/(u+ - x), continuously extended by m u+^(m-1) at x = u+.

    Near the diagonal it is written as ``u+^(m-1) expm1(m L)/expm1(L)`` with
    ``L = log(x/u+)``, so the difference quotient keeps full precision as x
    approaches u+.
    """
    if u_plus <= 0 or x < 0:
        raise DomainError("psi needs u_plus > 0 and x >= 0")
    base = u_plus ** (m - 1.0)
    if x == 0.0:
        return base
    if x == u_plus:
        return m * base
    t = x / u_plus
    if t < 0.5:
        return base * (1.0 - t**m) / (1.0 - t)
    L = math.log1p((x - u_plus) / u_plus)
    return base * math.expm1(m * L) / math.expm1(L)


def dpsi_dx(m: float, u_plus: float, x: float) -> float:
    if x == u_plus:
        return 0.5 * m * (m - 1.0) * u_plus ** (m - 2.0)
    t = x / u_plus
    return u_plus**m / (u_plus - x) ** 2 * ((m - 1.0) * t**m - m * t ** (m - 1.0) + 1.0)


def rh_speed(params: ModelParams, u_left: float, u_right: float) -> float:
    """Rankine-Hugoniot speed of a jump between two states in [0, 1]."""
    if abs(u_left - u_right) < 1e-14:
        raise DomainError("degenerate jump: states coincide")
    for v in (u_left, u_right):
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"jump states must lie in [0, 1], got {v}")
    hi, lo = max(u_left, u_right), min(u_left, u_right)
    return params.c * psi(params.m, hi, lo)


def solve_u_minus(params: ModelParams, sigma: float, u_plus: float, xtol: float = 1e-12) -> float:
    """The unique x in [0, u+] with c psi(u+, x) = sigma.

    Bisection on the guaranteed bracket, then Newton steps while they stay
    inside it.  For m = 2 the answer is sigma/c - u+.
    """
    m, c = params.m, params.c
    target = sigma / c
    lo_val, hi_val = u_plus ** (m - 1.0), m * u_plus ** (m - 1.0)
    slack = 1e-13 * max(1.0, hi_val)
    if target < lo_val - slack:
        raise NoAdmissibleJump(
            f"sigma/c={target} below u+^(m-1)={lo_val}: no entropic jump for this speed")
    if target > hi_val + slack:
        raise DomainError(f"sigma/c={target} above m u+^(m-1)={hi_val}")
    if target <= lo_val:
        return 0.0
    if target >= hi_val:
        return u_plus
    a, b = 0.0, u_plus
    while b - a > max(1e-6 * u_plus, xtol):
        mid = 0.5 * (a + b)
        if psi(m, u_plus, mid) < target:
            a = mid
        else:
            b = mid
    x = 0.5 * (a + b)
    for _ in range(50):
        d = dpsi_dx(m, u_plus, x)
        if d <= 0:
            break
        step = (psi(m, u_plus, x) - target) / d
        x_new = x - step
        if not a <= x_new <= b:
            x_new = 0.5 * (a + b)
        if psi(m, u_plus, x_new) < target:
            a = x_new
        else:
            b = x_new
        x = x_new
        if abs(step) <= xtol or b - a <= xtol:
            break
    return x


@dataclass
class JumpPair:
    sigma: float
    u_plus: float
    u_minus: float
    rh_residual: float


def jump_pair(params: ModelParams, sigma: float, u_plus: float) -> JumpPair:
    um = solve_u_minus(params, sigma, u_plus)
    res = abs(psi(params.m, u_plus, um) - sigma / params.c)
    return JumpPair(sigma, u_plus, um, res)


@dataclass
class JumpReport:
    admissible: bool
    rh_speed: float
    residual: float
    reasons: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"admissible": self.admissible, "rh_speed": self.rh_speed,
                "residual": self.residual, "reasons": list(self.reasons)}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def check_entropy_jump(params: ModelParams, sigma: float, u_left: float, u_right: float,
                       slope_left, slope_right, tol: float = 1e-8) -> JumpReport:
    """Entropy admissibility of an isolated jump moving at ``sigma``.

    Slopes are finite floats or :class:`Vertical` tags (``±inf`` floats and
    the strings ``"-inf"``/``"+inf"`` are converted).
    """
    reasons = []
    try:
        v = rh_speed(params, u_left, u_right)
    except DomainError as exc:
        return JumpReport(False, float("nan"), float("nan"), [str(exc)])
    residual = abs(v - sigma)
    if residual > tol:
        reasons.append(f"Rankine-Hugoniot speed {v:.12g} differs from sigma={sigma:.12g}")
    need = Vertical.DOWN if u_left > u_right else Vertical.UP
    sl, sr = _as_slope(slope_left), _as_slope(slope_right)
    if sl is not need:
        reasons.append(f"left slope must be {need.value}, got {sl if not isinstance(sl, Vertical) else sl.value}")
    if u_right != 0.0 and sr is not need:
        reasons.append(f"right slope must be {need.value}, got {sr if not isinstance(sr, Vertical) else sr.value}")
    return JumpReport(not reasons, v, residual, reasons)
