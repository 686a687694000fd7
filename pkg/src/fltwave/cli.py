"""Command-line front end.

    fltwave critical-speeds [--config PATH] [--out DIR] [--tol X]
    fltwave wave (--sigma X | --sigma-kind ent|smooth) [--asymptotics]
    fltwave sweep --sigmas 0.45,0.5,... [--jobs N]
    fltwave simulate [--t-end T] [--compare-tw SIGMA|ent|smooth]

Every command writes its CSV/JSON results and PNG figures, then a
``manifest.json`` listing all outputs with their SHA-256 digests.  With
``--check`` the manifest in ``--out`` is verified instead of recomputing.

Exit codes: 0 success, 2 configuration/validation error, 3 domain error
(e.g. no entropic wave at that speed), 4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import plotting
from .critical_speeds import CriticalSpeeds, critical_speeds
from .errors import FltwaveError, ValidationError
from .pde_solver import (
    Boundary,
    Grid,
    PdeState,
    bump,
    compare_front,
    run,
    smooth_step,
    write_run_config,
)
from .profile import build_wave, jump_asymptotics, wave_distance
from .reaction import ModelParams

MANIFEST = "manifest.json"
_PARAM_KEYS = ("nu", "c", "m", "reaction", "reaction.kind", "reaction.p", "reaction.q")


class NotFound(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


# ---------------------------------------------------------------------------
# config and outputs


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise NotFound(f"config file not found: {path}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


def params_from_config(cfg: dict) -> ModelParams:
    doc = cfg.get("params")
    if doc is None:
        doc = {k: v for k, v in cfg.items() if k in _PARAM_KEYS}
    if not isinstance(doc, dict):
        raise ConfigError("params must be a JSON object")
    return ModelParams.from_dict(doc)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class Outputs:
    """Tracks produced files; the manifest is written last."""

    def __init__(self, out_dir: Path):
        self.dir = out_dir
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.dir / name
        self.files.append(p)
        return p

    def json(self, name: str, doc) -> Path:
        p = self.path(name)
        p.write_text(json.dumps(doc, indent=2, default=_jsonable))
        return p

    def manifest(self, command: str, params: ModelParams, options: dict) -> Path:
        import matplotlib
        import numba
        import scipy

        doc = {
            "command": command,
            "params": params.to_dict(),
            "options": options,
            "outputs": [{"path": f.name, "sha256": _sha256(f), "bytes": f.stat().st_size}
                        for f in self.files],
            "versions": {
                "fltwave": __version__,
                "manifest_schema": 1,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "numba": numba.__version__,
                "matplotlib": matplotlib.__version__,
            },
        }
        tmp = self.dir / (MANIFEST + ".tmp")
        tmp.write_text(json.dumps(doc, indent=2, default=_jsonable))
        os.replace(tmp, self.dir / MANIFEST)
        return self.dir / MANIFEST


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def check_manifest(out_dir: Path) -> dict:
    mpath = out_dir / MANIFEST
    if not mpath.is_file():
        raise NotFound(f"no manifest in {out_dir}")
    doc = json.loads(mpath.read_text())
    problems = []
    for entry in doc.get("outputs", []):
        f = out_dir / entry["path"]
        if not f.is_file():
            problems.append({"path": entry["path"], "problem": "missing"})
        elif _sha256(f) != entry["sha256"]:
            problems.append({"path": entry["path"], "problem": "hash mismatch"})
    return {"manifest": str(mpath), "n_outputs": len(doc.get("outputs", [])), "problems": problems}


# ---------------------------------------------------------------------------
# commands


def _resolve_sigma(args, cfg, crit: CriticalSpeeds) -> float:
    sigma = args.sigma if args.sigma is not None else cfg.get("sigma")
    kind = args.sigma_kind or cfg.get("sigma_kind")
    if sigma is not None and kind is not None:
        raise ConfigError("give either sigma or sigma_kind, not both")
    if kind is not None:
        if kind == "ent":
            return crit.sigma_ent
        if kind == "smooth":
            return crit.sigma_smooth
        raise ConfigError(f"sigma_kind must be 'ent' or 'smooth', got {kind!r}")
    if sigma is None:
        raise ConfigError("wave needs sigma or sigma_kind")
    try:
        return float(sigma)
    except (TypeError, ValueError):
        raise ConfigError(f"cannot parse sigma={sigma!r}") from None


def cmd_critical_speeds(args, cfg, params, out: Outputs) -> dict:
    crit = critical_speeds(params, args.tol)
    out.json("critical_speeds.json", crit.to_dict())
    print(f"sigma_ent={crit.sigma_ent:.6f} sigma_smooth={crit.sigma_smooth:.6f}")
    if args.figures:
        plotting.plot_bisection_audit(crit.audit, crit.sigma_ent, crit.sigma_smooth,
                                      out.path("critical_speeds.png"))
    return {"tol": args.tol}


def cmd_wave(args, cfg, params, out: Outputs) -> dict:
    crit = critical_speeds(params, args.tol)
    sigma = _resolve_sigma(args, cfg, crit)
    wave = build_wave(params, sigma, crit)
    wave.export(out.path("profile.csv"), out.path("profile.json"))
    opts = {"sigma": sigma, "tol": args.tol, "asymptotics": bool(args.asymptotics)}
    if args.asymptotics:
        if wave.kind == "Smooth":
            doc = {"kind": wave.kind, "note": "smooth wave: no junction to fit"}
        else:
            doc = {"kind": wave.kind, **jump_asymptotics(params, sigma, wave).to_dict()}
        out.json("asymptotics.json", doc)
    print(f"kind={wave.kind} sigma={sigma:.6f} u_plus={wave.u_plus:.6f} u_minus={wave.u_minus:.6f}")
    if args.figures:
        plotting.plot_profiles([wave], out.path("profile.png"))
    return opts


def _sweep_one(job):
    params, sigma, crit = job
    try:
        w = build_wave(params, sigma, crit)
        return replace(w, left_orbit=None, right_orbit=None), None
    except FltwaveError as exc:
        return None, {"sigma": sigma, "error": type(exc).__name__, "message": str(exc),
                      "exit_code": exc.exit_code}


def _parse_sigmas(text):
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse sigma list {text!r}") from None


def cmd_sweep(args, cfg, params, out: Outputs) -> dict:
    sigmas = _parse_sigmas(args.sigmas) if args.sigmas is not None else cfg.get("sigma_list")
    if not isinstance(sigmas, list) or not sigmas:
        raise ConfigError("sweep needs a non-empty sigma list")
    sigmas = [float(s) for s in sigmas]
    crit = critical_speeds(params, args.tol)
    jobs = [(params, s, crit) for s in sigmas]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    waves, errors = [], []
    for k, (w, err) in enumerate(results):
        if w is None:
            errors.append(err)
            continue
        waves.append(w)
        w.export(out.path(f"profile_{k:02d}.csv"), out.path(f"profile_{k:02d}.json"))
    n = len(waves)
    sup = np.zeros((n, n))
    l1 = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            l1[i, j], sup[i, j] = wave_distance(waves[i], waves[j], 1.0)
            l1[j, i], sup[j, i] = l1[i, j], sup[i, j]
    ok_sigmas = [w.sigma for w in waves]
    header = "sigma," + ",".join(f"{s:.10g}" for s in ok_sigmas)
    for name, mat in (("distances_sup.csv", sup), ("distances_l1.csv", l1)):
        rows = np.column_stack([ok_sigmas, mat]) if n else np.empty((0, 1))
        np.savetxt(out.path(name), rows, delimiter=",", header=header, comments="", fmt="%.12g")
    out.json("sweep.json", {"sigmas": sigmas, "built": ok_sigmas, "errors": errors,
                            "sigma_ent": crit.sigma_ent, "sigma_smooth": crit.sigma_smooth})
    print(f"built {n}/{len(sigmas)} profiles")
    if args.figures and n:
        plotting.plot_profiles(waves, out.path("profiles.png"))
        plotting.plot_distance_matrix(ok_sigmas, sup, "sup distance", out.path("distances_sup.png"))
        plotting.plot_distance_matrix(ok_sigmas, l1, "L1 distance", out.path("distances_l1.png"))
    return {"sigmas": sigmas, "jobs": args.jobs, "tol": args.tol}


BUMP_RUN = {
    "grid": {"x_min": -16.0, "x_max": 16.0, "dx": 1.0 / 400.0},
    "bc": "DirichletZero",
    "cfl": 0.5,
    "t_end": 30.0,
    "method": "rkl2",
    "threshold": 0.01,
    "initial": {"kind": "bump", "amplitude": 0.9, "center": 0.0, "half_width": 1.0},
    "observer_dt": 0.5,
    "snapshots": [0.0, 10.0, 20.0, 30.0],
}


def _initial_state(grid, init: dict, params, crit_fn) -> PdeState:
    kind = init.get("kind", "bump")
    if kind == "bump":
        return bump(grid, float(init.get("amplitude", 0.9)), float(init.get("center", 0.0)),
                    float(init.get("half_width", 1.0)))
    if kind == "step":
        return smooth_step(grid, float(init.get("position", 0.0)), float(init.get("width", 1.0)),
                           float(init.get("high", 1.0)))
    if kind == "tw":
        crit = crit_fn()
        sig = init.get("sigma", "ent")
        sigma = crit.sigma_ent if sig == "ent" else crit.sigma_smooth if sig == "smooth" else float(sig)
        w = build_wave(params, sigma, crit)
        u = np.clip(w.evaluate(grid.centers - float(init.get("shift", 0.0))), 0.0, 1.0)
        return PdeState(grid, u, 0.0)
    raise ConfigError(f"unknown initial data kind {kind!r}")


def cmd_simulate(args, cfg, params, out: Outputs) -> dict:
    sim = dict(BUMP_RUN)
    sim.update(cfg.get("simulate", {}))
    if args.t_end is not None:
        sim["t_end"] = args.t_end
    t_end = float(sim["t_end"])
    if not t_end > 0:
        raise ConfigError(f"t_end must be positive, got {t_end}")
    g = sim["grid"]
    if "n_cells" in g:
        grid = Grid(float(g["x_min"]), float(g["x_max"]), int(g["n_cells"]))
    else:
        grid = Grid.with_spacing(float(g["x_min"]), float(g["x_max"]), float(g["dx"]))
    bc = Boundary.parse(sim["bc"])
    crit_cache = {}

    def crit_fn():
        if "c" not in crit_cache:
            crit_cache["c"] = critical_speeds(params, args.tol)
        return crit_cache["c"]

    init = _initial_state(grid, sim.get("initial", {}), params, crit_fn)
    observers = sim.get("observers")
    if observers is None:
        dt_obs = float(sim.get("observer_dt", t_end / 20))
        observers = list(np.arange(dt_obs, t_end + 1e-9, dt_obs))
    threshold = float(sim.get("threshold", 0.01))
    res = run(params, init, bc, t_end, observers, cfl=float(sim["cfl"]),
              method=sim.get("method", "rkl2"), threshold=threshold, keep_snapshots=True)

    write_run_config(out.path("run_config.json"), grid, bc, float(sim["cfl"]), t_end,
                     sim.get("initial", {}), observers)
    res.trace.export(out.path("front_trace.csv"))
    snaps = {0.0: init.u, **res.snapshots}
    wanted = sim.get("snapshots") or [t_end]
    written = {}
    for t in wanted:
        tk = min(snaps, key=lambda s: abs(s - float(t)))
        if tk in written:
            continue
        p = out.path(f"snapshot_t{tk:09.4f}.csv")
        PdeState(grid, snaps[tk], tk).export(p)
        written[tk] = p.name
    diag = res.diagnostics
    summary = {
        "late_front_speed": res.trace.late_speed(),
        "final_front": res.trace.positions[-1],
        "final_mass": diag["mass"][-1],
        "n_steps": diag["n_steps"],
        "n_stages": diag["n_stages"],
        "method": diag["method"],
        "threshold": threshold,
        "threshold_sensitivity": float(np.nanmax(np.abs(
            np.asarray(diag["front_alt"]) - np.asarray(res.trace.positions)))),
    }
    overlay = None
    compare = args.compare_tw if args.compare_tw is not None else sim.get("compare_tw")
    if compare is not None:
        crit = crit_fn()
        sigma = (crit.sigma_ent if compare == "ent" else crit.sigma_smooth if compare == "smooth"
                 else float(compare))
        wave = build_wave(params, sigma, crit)
        cmp = compare_front(grid, res.state.u, wave, threshold)
        cmp.update({"sigma": sigma, "kind": wave.kind, "sigma_ent": crit.sigma_ent})
        summary["compare_tw"] = cmp
        x = grid.centers
        near = np.abs(x - cmp["x_front"]) < 3.0
        overlay = (x[near], wave.evaluate(x[near] - cmp["shift"]))
    out.json("diagnostics.json", {"summary": summary, "times": diag["times"], "mass": diag["mass"],
                                  "reaction_integral": diag["reaction_integral"],
                                  "u_max": diag["u_max"]})
    print(f"late front speed={summary['late_front_speed']:.6f} front={summary['final_front']:.4f}")
    if "compare_tw" in summary:
        print(f"near-front sup discrepancy={summary['compare_tw']['sup']:.4f}")
    if args.figures:
        shown = {t: snaps[t] for t in written}
        plotting.plot_simulation(grid.centers, shown, res.trace, out.path("simulation.png"), overlay)
    return {"simulate": sim, "t_end": t_end, "compare_tw": compare}


COMMANDS = {
    "critical-speeds": cmd_critical_speeds,
    "wave": cmd_wave,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", default="fltwave-out", help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--tol", type=float, default=1e-6, help="critical-speed tolerance")
    common.add_argument("--check", action="store_true",
                        help="verify the manifest in --out instead of computing")
    common.add_argument("--no-figures", dest="figures", action="store_false",
                        help="skip PNG figures")

    parser = argparse.ArgumentParser(prog="fltwave", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("critical-speeds", parents=[common], help="compute sigma_ent and sigma_smooth")
    w = sub.add_parser("wave", parents=[common], help="build one normalized traveling wave")
    w.add_argument("--sigma", type=float)
    w.add_argument("--sigma-kind", choices=["ent", "smooth"])
    w.add_argument("--asymptotics", action="store_true", help="fit the power law at the junction")
    s = sub.add_parser("sweep", parents=[common], help="profiles and distance matrices over speeds")
    s.add_argument("--sigmas", help="comma-separated speeds")
    m = sub.add_parser("simulate", parents=[common], help="time-dependent run")
    m.add_argument("--t-end", type=float)
    m.add_argument("--compare-tw", help="speed of the wave to compare with, or ent|smooth")
    return parser


def _error_doc(exc: BaseException, code: int) -> dict:
    return {"error": type(exc).__name__, "message": str(exc), "exit_code": code}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    out_dir = Path(args.out)
    try:
        if args.check:
            rep = check_manifest(out_dir)
            print(json.dumps(rep, indent=2))
            return 0 if not rep["problems"] else 2
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        if not args.tol > 0:
            raise ConfigError("--tol must be positive")
        cfg = load_config(args.config)
        params = params_from_config(cfg)
        out = Outputs(out_dir)
        options = COMMANDS[args.command](args, cfg, params, out)
        out.manifest(args.command, params, options)
        return 0
    except FltwaveError as exc:
        err, code = exc, exc.exit_code
    except (ValueError, TypeError, KeyError) as exc:
        err, code = exc, 2
    except Exception as exc:  # noqa: BLE001 - last-resort report for unexpected failures
        err, code = exc, 4
        traceback.print_exc(file=sys.stderr)
    doc = _error_doc(err, code)
    print(json.dumps(doc), file=sys.stderr)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "error.json").write_text(json.dumps(doc, indent=2))
    except OSError:
        pass
    return code


if __name__ == "__main__":
    sys.exit(main())
