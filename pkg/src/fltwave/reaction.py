"""Reaction terms of FKPP class and the model parameters that carry them.

Two closed forms are supported, ``u(1-u)`` and ``u**p (1-u**q)``.  Both have
exact derivatives at the equilibria u=0 and u=1, which the phase-plane code
relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import DomainError, ValidationError

__all__ = [
    "ReactionSpec",
    "ModelParams",
    "eval_F",
    "eval_K",
    "F_prime",
    "K_prime_at_1",
    "K_at_0",
    "lipschitz_constant",
]

# rounding slack accepted on the [0, 1] domain check
_DOMAIN_SLACK = 1e-12
# interior grid used for the positivity heuristic
_N_VALIDATION = 1001


@dataclass(frozen=True)
class ReactionSpec:
    kind: str = "fkpp"
    p: float = 1.0
    q: float = 1.0

    def __post_init__(self):
        kind = self.kind.lower()
        if kind in ("power", "powerlaw", "power_law"):
            kind = "powerlaw"
        if kind not in ("fkpp", "powerlaw"):
            raise ValidationError(f"unknown reaction kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "fkpp":
            object.__setattr__(self, "p", 1.0)
            object.__setattr__(self, "q", 1.0)
        elif not (self.p >= 1.0 and self.q >= 1.0):
            raise ValidationError(f"power-law reaction needs p, q >= 1, got p={self.p}, q={self.q}")

    @classmethod
    def fkpp(cls) -> "ReactionSpec":
        return cls("fkpp")

    @classmethod
    def power_law(cls, p: float, q: float) -> "ReactionSpec":
        return cls("powerlaw", float(p), float(q))


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the flux-limited porous-media equation.

    ``nu`` is the kinematic viscosity, ``c`` the characteristic (maximal)
    speed and ``m > 1`` the porous-media exponent.
    """

    nu: float = 1.0
    c: float = 1.0
    m: float = 2.0
    reaction: ReactionSpec = field(default_factory=ReactionSpec)

    def __post_init__(self):
        for name in ("nu", "c", "m"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise ValidationError(f"{name} must be a finite real, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.nu <= 0 or self.c <= 0:
            raise ValidationError("nu and c must be strictly positive")
        if self.m <= 1:
            raise ValidationError(f"porous-media exponent must satisfy m > 1, got m={self.m}")
        _validate_reaction(self)

    def to_dict(self) -> dict[str, Any]:
        return {
            "nu": self.nu,
            "c": self.c,
            "m": self.m,
            "reaction.kind": self.reaction.kind,
            "reaction.p": self.reaction.p,
            "reaction.q": self.reaction.q,
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "ModelParams":
        """Build from a flat key-value document.

        Nested ``{"reaction": {"kind": ...}}`` is accepted as well as the
        flat ``reaction.kind`` keys.  Strings are parsed with a period as
        decimal separator only.
        """
        flat = dict(doc)
        nested = flat.pop("reaction", None)
        if isinstance(nested, Mapping):
            for k, v in nested.items():
                flat.setdefault(f"reaction.{k}", v)
        elif isinstance(nested, str):
            flat.setdefault("reaction.kind", nested)

        def num(key, default):
            v = flat.get(key, default)
            if isinstance(v, str):
                try:
                    return float(v)
                except ValueError:
                    raise ValidationError(f"{key}: cannot parse {v!r} as a number") from None
            return v

        reaction = ReactionSpec(
            str(flat.get("reaction.kind", "fkpp")),
            float(num("reaction.p", 1.0)),
            float(num("reaction.q", 1.0)),
        )
        return cls(num("nu", 1.0), num("c", 1.0), num("m", 2.0), reaction)


def _check_domain(u):
    ua = np.asarray(u, dtype=float)
    if np.any(ua < -_DOMAIN_SLACK) or np.any(ua > 1 + _DOMAIN_SLACK) or np.any(np.isnan(ua)):
        raise DomainError(f"u must lie in [0, 1], got {u!r}")
    return np.clip(ua, 0.0, 1.0)


def _F(spec: ReactionSpec, u):
    if spec.kind == "fkpp":
        return u * (1.0 - u)
    return u**spec.p * (1.0 - u**spec.q)


def eval_F(params: ModelParams, u):
    """Reaction term F(u); accepts scalars or arrays."""
    ua = _check_domain(u)
    out = _F(params.reaction, ua)
    return float(out) if out.ndim == 0 else out


def K_at_0(params: ModelParams) -> float:
    """F'(0), the continuous extension of F(u)/u at the origin."""
    spec = params.reaction
    if spec.kind == "fkpp":
        return 1.0
    return 1.0 if spec.p == 1.0 else 0.0


def eval_K(params: ModelParams, u):
    """K(u) = F(u)/u, extended by F'(0) at u=0."""
    ua = _check_domain(u)
    spec = params.reaction
    if spec.kind == "fkpp":
        out = 1.0 - ua
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(ua > 0, ua ** (spec.p - 1.0) * (1.0 - ua**spec.q), K_at_0(params))
    return float(out) if np.ndim(out) == 0 else out


def F_prime(params: ModelParams, u):
    ua = _check_domain(u)
    spec = params.reaction
    if spec.kind == "fkpp":
        out = 1.0 - 2.0 * ua
    else:
        p, q = spec.p, spec.q
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(
                ua > 0,
                p * ua ** (p - 1.0) - (p + q) * ua ** (p + q - 1.0),
                K_at_0(params),
            )
    return float(out) if np.ndim(out) == 0 else out


def K_prime_at_1(params: ModelParams) -> float:
    """K'(1) = F'(1); strictly negative for admissible reactions."""
    spec = params.reaction
    val = -1.0 if spec.kind == "fkpp" else -spec.q
    if val >= 0:
        raise ValidationError(f"K'(1) must be negative, got {val}")
    return val


def lipschitz_constant(params: ModelParams) -> float:
    """sup |F'| over [0, 1], evaluated on a fine grid plus the endpoints."""
    if params.reaction.kind == "fkpp":
        return 1.0
    u = np.linspace(0.0, 1.0, 20001)
    return float(np.max(np.abs(F_prime(params, u))))


def _validate_reaction(params: ModelParams) -> None:
    spec = params.reaction
    if _F(spec, np.float64(0.0)) != 0.0 or _F(spec, np.float64(1.0)) != 0.0:
        raise ValidationError("reaction must vanish at u=0 and u=1")
    # heuristic positivity check on interior points
    u = np.linspace(0.0, 1.0, _N_VALIDATION + 2)[1:-1]
    if np.any(_F(spec, u) <= 0):
        raise ValidationError("reaction must be positive on (0, 1)")
    K_prime_at_1(params)
