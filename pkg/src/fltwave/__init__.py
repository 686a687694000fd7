"""Traveling waves and front dynamics for a flux-limited porous-media equation with reaction."""

from .critical_speeds import CriticalSpeeds, critical_speeds, find_sigma_ent, find_sigma_smooth, u_plus
from .errors import (
    DomainError,
    FltwaveError,
    NonConvergence,
    SpeedBelowEntropic,
    ValidationError,
)
from .jump_matching import check_entropy_jump, psi, rh_speed, solve_u_minus
from .phase_plane import IntegratorOptions, Orbit, OrbitClass, classify, launch_and_integrate, u_star
from .profile import WaveProfile, build_wave, jump_asymptotics, wave_distance, xi_of_u
from .reaction import ModelParams, ReactionSpec

__version__ = "0.1.0"

__all__ = [
    "CriticalSpeeds",
    "DomainError",
    "FltwaveError",
    "IntegratorOptions",
    "ModelParams",
    "NonConvergence",
    "Orbit",
    "OrbitClass",
    "ReactionSpec",
    "SpeedBelowEntropic",
    "ValidationError",
    "WaveProfile",
    "build_wave",
    "check_entropy_jump",
    "classify",
    "critical_speeds",
    "find_sigma_ent",
    "find_sigma_smooth",
    "jump_asymptotics",
    "launch_and_integrate",
    "psi",
    "rh_speed",
    "solve_u_minus",
    "u_plus",
    "u_star",
    "wave_distance",
    "xi_of_u",
]
