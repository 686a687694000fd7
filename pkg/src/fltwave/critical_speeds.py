"""The two critical wave speeds.

``sigma_smooth`` separates orbits leaving through r=1 (Type II, below) from
orbits reaching (0, r*) (Type I, above).  Orbits are ordered in sigma, so the
classification is a Dedekind cut and plain bisection finds it.

``sigma_ent`` is the speed whose discontinuous wave jumps straight to zero,
i.e. the root of ``g(sigma) = sigma/c - u_plus(sigma)**(m-1)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from scipy.optimize import brentq

from .errors import DomainError, InvalidBracket, NonConvergence
from .phase_plane import IntegratorOptions, classify, launch_and_integrate, u_star
from .reaction import ModelParams

__all__ = [
    "CriticalSpeeds",
    "find_sigma_smooth",
    "find_sigma_ent",
    "u_plus",
    "critical_speeds",
    "audit_is_monotone",
    "check_bounds",
]

DEFAULT_TOL = 1e-6


@dataclass
class CriticalSpeeds:
    sigma_ent: float
    sigma_smooth: float
    tol: float
    audit: list = field(default_factory=list)
    # the bisection bound known to be Type II
    sigma_smooth_lower: float = float("nan")

    @property
    def n_probes(self) -> int:
        return len(self.audit)

    def to_dict(self) -> dict:
        return {
            "sigma_ent": self.sigma_ent,
            "sigma_smooth": self.sigma_smooth,
            "tol": self.tol,
            "n_probes": self.n_probes,
            "audit": [dict(a) for a in self.audit],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def summary(self) -> str:
        return f"sigma_ent={self.sigma_ent:.6f}\nsigma_smooth={self.sigma_smooth:.6f}"


def u_plus(params: ModelParams, sigma: float, opts: IntegratorOptions | None = None) -> float:
    """Escape abscissa of the Type II orbit at speed ``sigma``."""
    opts = opts or IntegratorOptions()
    cls = launch_and_integrate(params, sigma, replace(opts, refine=0)).orbit_class
    if cls.variant != "II":
        raise DomainError(f"sigma={sigma} gives a Type I orbit; u_plus is undefined")
    return cls.value


def find_sigma_smooth(params: ModelParams, tol: float = DEFAULT_TOL,
                      opts: IntegratorOptions | None = None,
                      audit: list | None = None) -> float:
    """Bisection of the Type II / Type I cut on [0, m c].

    Grazing probes count as Type II.  The midpoint of the final bracket is
    returned, and it is checked to be Type II itself, so that u_plus is
    defined there.  ``audit`` (if given) receives one record per probe.
    """
    lo, hi = _smooth_bracket(params, tol, opts, audit)
    return 0.5 * (lo + hi)


def _smooth_bracket(params, tol, opts, audit):
    if tol <= 0:
        raise ValueError("tol must be positive")
    opts = opts or IntegratorOptions()
    audit = audit if audit is not None else []

    def probe(sigma):
        cls = classify(params, sigma, opts)
        audit.append({"stage": "smooth", "sigma": sigma, "class": cls.variant,
                      "grazing": cls.grazing})
        return cls.variant

    lo, hi = 0.0, params.m * params.c
    if probe(lo) != "II":
        raise InvalidBracket("sigma=0 is not Type II")
    # just below m c the orbit must already be Type I
    hi_probe = hi * (1.0 - 1e-6)
    if probe(hi_probe) != "I":
        raise InvalidBracket(f"sigma={hi_probe} is not Type I")
    hi = hi_probe
    while hi - lo > 2.0 * tol:
        mid = 0.5 * (lo + hi)
        if probe(mid) == "II":
            lo = mid
        else:
            hi = mid
    # the returned midpoint must itself be Type II (grazing included),
    # otherwise keep halving from above
    while probe(0.5 * (lo + hi)) != "II":
        hi = 0.5 * (lo + hi)
        if hi - lo <= 1e-15 * hi:
            raise NonConvergence("sigma_smooth bisection stalled")
    return lo, hi


def find_sigma_ent(params: ModelParams, tol: float = DEFAULT_TOL,
                   sigma_smooth: float | None = None,
                   opts: IntegratorOptions | None = None,
                   audit: list | None = None) -> float:
    """Root of sigma/c - u_plus(sigma)**(m-1) on [sigma_smooth/m, sigma_smooth].

    At the root the Rankine-Hugoniot partner u- of u+ is exactly 0.
    """
    opts = opts or IntegratorOptions()
    audit = audit if audit is not None else []
    if sigma_smooth is None:
        sigma_smooth = find_sigma_smooth(params, tol, opts, audit)
    c, m = params.c, params.m

    def g(sigma):
        cls = launch_and_integrate(params, sigma, replace(opts, refine=0)).orbit_class
        # right at the cut a probe may fall on the Type I side; u_plus -> u* there
        up = cls.value if cls.variant == "II" else u_star(params, sigma)
        val = sigma / c - up ** (m - 1.0)
        audit.append({"stage": "ent", "sigma": sigma, "class": cls.variant, "g": val})
        return val

    a, b = sigma_smooth / m, sigma_smooth
    ga, gb = g(a), g(b)
    if not (ga < 0 < gb):
        raise InvalidBracket(f"g does not change sign on [{a}, {b}]: g={ga}, {gb}")
    root, info = brentq(g, a, b, xtol=tol, rtol=1e-15, full_output=True, disp=False)
    if not info.converged:
        raise NonConvergence(f"sigma_ent root-find failed: {info.flag}")
    return float(root)


def critical_speeds(params: ModelParams, tol: float = DEFAULT_TOL,
                    opts: IntegratorOptions | None = None) -> CriticalSpeeds:
    audit: list = []
    lo, hi = _smooth_bracket(params, tol, opts, audit)
    ss = 0.5 * (lo + hi)
    se = find_sigma_ent(params, tol, lo, opts, audit)
    return CriticalSpeeds(se, ss, tol, audit, lo)


def audit_is_monotone(audit: list) -> bool:
    """All Type II probes of the sigma_smooth bisection lie below all Type I probes."""
    probes = [a for a in audit if a.get("stage") == "smooth"]
    ii = [a["sigma"] for a in probes if a["class"] == "II"]
    i = [a["sigma"] for a in probes if a["class"] == "I"]
    return not ii or not i or max(ii) < min(i)


def check_bounds(cs: CriticalSpeeds, params: ModelParams) -> list[str]:
    """Violated bounds among sigma_smooth/m < sigma_ent < c, sigma_ent < sigma_smooth < m c."""
    t = cs.tol
    se, ss, m, c = cs.sigma_ent, cs.sigma_smooth, params.m, params.c
    out = []
    if not ss / m < se + t:
        out.append("sigma_smooth/m < sigma_ent")
    if not se < c + t:
        out.append("sigma_ent < c")
    if not se < ss + t:
        out.append("sigma_ent < sigma_smooth")
    if not ss < m * c + t:
        out.append("sigma_smooth < m c")
    return out
