"""Acceptance checks for the FKPP model with nu = c = 1, m = 2.

Each test prints one ``[PASS]``/``[FAIL]`` line before asserting.
"""

import math
import time

import numpy as np
import pytest

from fltwave.cli import BUMP_RUN
from fltwave.critical_speeds import critical_speeds, find_sigma_ent, find_sigma_smooth, u_plus
from fltwave.jump_matching import solve_u_minus
from fltwave.pde_solver import (
    Boundary,
    Grid,
    PdeState,
    bump,
    compare_front,
    l1_stability_check,
    run,
    step,
)
from fltwave.phase_plane import IntegratorOptions, lambda_sigma, launch_and_integrate, u_star
from fltwave.profile import build_wave, jump_asymptotics, powerlaw_coefficient, wave_distance
from fltwave.reaction import ModelParams

REFERENCE_ENT = 0.437803
REFERENCE_SMOOTH = 0.661621


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail}")
        assert ok, detail
    return emit


def test_01_critical_speeds(fkpp, report):
    t0 = time.perf_counter()
    s_smooth = find_sigma_smooth(fkpp)
    s_ent = find_sigma_ent(fkpp, sigma_smooth=s_smooth)
    elapsed = time.perf_counter() - t0
    e1, e2 = abs(s_ent - REFERENCE_ENT), abs(s_smooth - REFERENCE_SMOOTH)
    ok = e1 <= 1e-3 and e2 <= 1e-3 and elapsed < 10.0
    report(1, "critical speeds", ok,
           f"sigma_ent={s_ent:.6f} (err {e1:.1e}), sigma_smooth={s_smooth:.6f} (err {e2:.1e}), {elapsed:.1f}s")


def test_02_bouncing_point(fkpp, crit, report):
    gap = abs(u_plus(fkpp, crit.sigma_smooth) - u_star(fkpp, crit.sigma_smooth))
    us_pub = u_star(fkpp, REFERENCE_SMOOTH)
    ok = gap <= 1e-4 and abs(us_pub - 0.3308) <= 1e-3
    report(2, "u_plus meets u_star at sigma_smooth", ok,
           f"|u+ - u*|={gap:.2e}, u*(reference)={us_pub:.6f}")


def test_03_rh_closed_form(fkpp, crit, report):
    worst = 0.0
    for s in np.linspace(crit.sigma_ent, crit.sigma_smooth, 20):
        up = u_plus(fkpp, s)
        um = solve_u_minus(fkpp, s, up)
        worst = max(worst, abs(up + um - s))
    report(3, "u+ + u- = sigma for m=2", worst <= 1e-8, f"max residual {worst:.2e} over 20 speeds")


def test_04_entry_slope(fkpp, report):
    opts = IntegratorOptions(launch_offset=1e-4)
    errs = {}
    for s, expected in ((1.0, -2.0 / (1.0 + math.sqrt(5.0))), (0.0, -1.0)):
        o = launch_and_integrate(fkpp, s, opts)
        slope = np.polyfit(o.u[:10], o.r[:10], 1)[0]
        assert lambda_sigma(fkpp, s) == pytest.approx(expected, abs=1e-14)
        errs[s] = abs(slope / expected - 1.0)
    ok = max(errs.values()) <= 0.01
    report(4, "entry slope", ok, f"relative error {errs[1.0]:.1e} at sigma=1, {errs[0.0]:.1e} at sigma=0")


def test_05_power_law(fkpp, crit, report):
    w = build_wave(fkpp, crit.sigma_ent, crit)
    a = jump_asymptotics(fkpp, crit.sigma_ent, w)
    ref = powerlaw_coefficient(fkpp, crit.sigma_ent)
    rel = abs(a.coeff_left / ref - 1.0)
    ok = abs(a.exponent_left - 2.0 / 3.0) <= 0.05 and rel <= 0.10 and abs(ref - 0.455) < 5e-3
    report(5, "power law at the half-line front", ok,
           f"exponent {a.exponent_left:.4f}, amplitude {a.coeff_left:.4f} vs {ref:.4f} ({rel:.1%})")


def test_06_ordering(fkpp, crit, report):
    sig = np.linspace(0.1, 1.5, 10)
    orbits = [launch_and_integrate(fkpp, s) for s in sig]
    violations = 0
    for i in range(10):
        for j in range(i + 1, 10):
            a, b = orbits[i], orbits[j]
            lo, hi = max(a.u[-1], b.u[-1]), min(a.u[0], b.u[0])
            uu = np.linspace(lo, hi, 12)[1:-1]
            violations += int(np.sum(a.r_of_u(uu) <= b.r_of_u(uu) + 1e-9))
    speeds = np.linspace(crit.sigma_ent, crit.sigma_smooth, 12)
    ups = np.array([u_plus(fkpp, s) for s in speeds])
    ums = np.array([solve_u_minus(fkpp, s, up) for s, up in zip(speeds, ups)])
    mono = int(np.sum(np.diff(ups) >= -1e-9)) + int(np.sum(np.diff(ums) <= 1e-9))
    report(6, "orbit ordering and monotone jump states", violations == 0 and mono == 0,
           f"{violations} ordering violations on 10x10 grid, {mono} monotonicity violations")


def test_07_continuity_in_sigma(fkpp, crit, report):
    bad = []
    for s in (crit.sigma_ent, 0.57, crit.sigma_smooth, 1.0):
        w0 = build_wave(fkpp, s, crit)
        dist = [wave_distance(w0, build_wave(fkpp, s + d, crit), xi_max=20.0) for d in (1e-1, 1e-2, 1e-3)]
        l1 = [d[0] for d in dist]
        sup = [d[1] for d in dist]
        if not (l1[0] > l1[1] > l1[2] and sup[0] > sup[1] > sup[2]):
            bad.append((s, l1, sup))
    report(7, "profiles depend continuously on sigma", not bad,
           "distances shrink with the speed increment at all four speeds" if not bad else f"{bad}")


def test_08_pde_front(fkpp, crit, report):
    g = BUMP_RUN["grid"]
    grid = Grid.with_spacing(g["x_min"], g["x_max"], g["dx"])
    ini = BUMP_RUN["initial"]
    init = bump(grid, ini["amplitude"], ini["center"], ini["half_width"])
    t0 = time.perf_counter()
    res = run(fkpp, init, Boundary.DIRICHLET_ZERO, BUMP_RUN["t_end"],
              observers=np.arange(0.5, BUMP_RUN["t_end"] + 1e-9, 0.5), cfl=BUMP_RUN["cfl"])
    elapsed = time.perf_counter() - t0
    speed = res.trace.late_speed()
    wave = build_wave(fkpp, crit.sigma_ent, crit)
    cmp = compare_front(grid, res.state.u, wave)
    ok = speed <= crit.sigma_ent * 1.05 and cmp["sup"] <= 0.05 and elapsed < 120.0
    report(8, "bump front speed and shape", ok,
           f"late speed {speed:.4f} (bound {crit.sigma_ent * 1.05:.4f}), near-front sup {cmp['sup']:.4f}, {elapsed:.0f}s")


def test_09_l1_stability(fkpp, report):
    grid = Grid.with_spacing(-8.0, 8.0, 1.0 / 400.0)
    obs = np.arange(0.25, 5.0 + 1e-9, 0.25)
    a = run(fkpp, bump(grid, 0.9, 0.0, 1.0), Boundary.DIRICHLET_ZERO, 5.0, obs, keep_snapshots=True)
    b = run(fkpp, bump(grid, 0.85, 0.05, 1.0), Boundary.DIRICHLET_ZERO, 5.0, obs, keep_snapshots=True)
    rep = l1_stability_check(fkpp, a, b)
    report(9, "L1 stability", rep.ratio <= 1.05, f"max ratio {rep.ratio:.4f}")


def test_10_max_principle_and_mass(fkpp, report):
    rng = np.random.default_rng(20261015)
    grid = Grid(0.0, 1.0, 64)
    n_steps, breaches = 0, 0
    for _ in range(20):
        s = PdeState(grid, rng.random(64))
        for _ in range(500):
            s = step(fkpp, s, Boundary.NEUMANN_ZERO)
            breaches += int(s.u.min() < 0.0 or s.u.max() > 1.0)
            n_steps += 1
    grid = Grid.with_spacing(-4.0, 4.0, 1.0 / 400.0)
    obs = np.linspace(0.0, 2.0, 201)
    res = run(fkpp, bump(grid, 0.8, 0.0, 1.5), Boundary.NEUMANN_ZERO, 2.0, obs)
    d = res.diagnostics
    t, m, r = map(np.asarray, (d["times"], d["mass"], d["reaction_integral"]))
    produced = np.concatenate([[0.0], np.cumsum(0.5 * (r[1:] + r[:-1]) * np.diff(t))])
    rate = float(np.max(np.abs(m - m[0] - produced)[1:] / t[1:]))
    ok = breaches == 0 and rate <= 5 * grid.dx
    report(10, "maximum principle and mass balance", ok,
           f"{breaches} breaches in {n_steps} steps, mass residual {rate:.2e} per unit time (bound {5 * grid.dx:.1e})")
