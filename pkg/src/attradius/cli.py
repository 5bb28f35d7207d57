"""Command-line entry point.

Subcommands: simulate | scan | spectrum | orbit | basin | reproduce.
Configuration comes from a JSON file (--config) deep-merged over built-in
defaults; command-line flags win over the file. Exit codes: 0 ok,
1 computation failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import exports, families, norms, orbit as orbit_mod, scan as scan_mod, spectral
from .dde import SolverOptions, integrate
from .models import make_scalar_cubic, make_swing, model_from_json

PRESETS = ("fig3", "fig4", "fig5", "fig7", "example1")


class ConfigError(Exception):
    pass


DEFAULTS = {
    "model": {"name": "swing", "tau": None, "params": {}, "file": None},
    "norm": {"kind": None, "block_I": None, "grid_density": 128},
    "solver": {"rtol": 1e-6, "atol": 1e-9, "max_step": None, "min_step": None,
               "first_step": None, "r_div": 1e3, "k_smooth": 4},
    "scan": {"families": None, "omega": None, "n_directions": 32, "dr": 0.05,
             "eps_r": 1e-3, "r_max": 20.0, "delta_num": 0.05, "horizon": None,
             "use_symmetry": False, "pixel": False, "pixel_extent": 1.0,
             "pixel_resolution": 41},
    "simulate": {"family": "constant", "p": [0.1, 0.0]},
    "spectrum": {"tau_max": 25.0, "N": 32},
    "orbit": {"tau_target": None, "L": 40, "degree": 4, "dtau": 0.1,
              "dtau_max": 0.5},
    "basin": {"basis": "legendre", "degree": 2, "rho": 10.0, "samples": 200},
    "seed": 0,
    "workers": None,
    "out": "out",
}


def _merge(base: dict, user: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in user.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown configuration key {where!r}")
        if isinstance(base[key], dict) and key not in ("params",):
            if not isinstance(val, dict):
                raise ConfigError(f"configuration key {where!r} must be an object")
            out[key] = _merge(base[key], val, where)
        else:
            out[key] = val
    return out


def load_config(path) -> dict:
    if path is None:
        return copy.deepcopy(DEFAULTS)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            user = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(user, dict):
        raise ConfigError("config root must be a JSON object")
    return _merge(DEFAULTS, user)


def config_roundtrip(cfg: dict) -> dict:
    return json.loads(json.dumps(cfg))


def build_model(cfg: dict):
    mc = cfg["model"]
    name = mc["name"]
    params = mc.get("params") or {}
    try:
        if name == "swing":
            kw = {"a": 0.05, "a_tilde": 0.125, "w": 0.5, "tau": 20.0}
            kw.update(params)
            if mc["tau"] is not None:
                kw["tau"] = float(mc["tau"])
            return make_swing(**kw)
        if name == "scalar-cubic":
            tau = mc["tau"] if mc["tau"] is not None else params.get("tau", 1.0)
            return make_scalar_cubic(float(tau))
        if name == "file":
            if not mc["file"]:
                raise ConfigError("model.file is required for model name 'file'")
            model = model_from_json(mc["file"])
            if mc["tau"] is not None:
                model.tau = float(mc["tau"])
            return model
    except (ValueError, TypeError, OSError) as exc:
        raise ConfigError(f"invalid model configuration: {exc}") from exc
    raise ConfigError(f"unknown model {name!r}")


def build_norm(cfg: dict, model) -> norms.NormSpace:
    nc = cfg["norm"]
    kind = nc["kind"]
    if kind is None:
        kind = "q" if model.block_I else "c"
    gd = int(nc["grid_density"])
    try:
        if kind == "q":
            block = nc["block_I"] if nc["block_I"] is not None else model.block_I
            if not block:
                raise ConfigError("quotient norm needs norm.block_I or model metadata")
            return norms.quotient(tuple(block), grid_density=gd)
        if kind in ("c", "m2"):
            return norms.NormSpace(kind, grid_density=gd)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown norm kind {kind!r}")


def build_solver(cfg: dict) -> SolverOptions:
    sc = cfg["solver"]
    try:
        return SolverOptions(
            rtol=float(sc["rtol"]), atol=float(sc["atol"]),
            max_step=sc["max_step"], min_step=sc["min_step"],
            first_step=sc["first_step"], r_div=float(sc["r_div"]),
            k_smooth=int(sc["k_smooth"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid solver options: {exc}") from exc


def _family_entry(entry, model, omega):
    if isinstance(entry, dict):
        try:
            if "table" in entry:
                from . import exports
                seg = exports.segment_from_dict(
                    json.loads(Path(entry["table"]).read_text())
                    if isinstance(entry["table"], str) else entry["table"])
                knots, vals, ders = seg.table()
                return families.family_from_table(
                    knots, vals, ders, name=str(entry.get("name", "table")))
            return families.basis_family(entry["basis"], int(entry["degree"]),
                                         dim=model.dim)
        except (KeyError, ValueError, OSError) as exc:
            raise ConfigError(f"invalid family entry {entry!r}: {exc}") from exc
    if isinstance(entry, str) and entry.startswith("basis-"):
        parts = entry.split(":")
        degree = int(parts[1]) if len(parts) > 1 else 2
        return families.basis_family(parts[0][len("basis-"):], degree,
                                     dim=model.dim)
    try:
        if model.dim == 1:
            return families.scalar_family(entry, omega=omega)
        if model.dim == 2:
            return families.swing_family(entry, omega=omega)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError("families for models of dimension > 2 must be basis entries")


def build_families(cfg: dict, model):
    names = cfg["scan"]["families"]
    if names is None:
        names = ["constant", "jump", "cosine", "sine"] if model.dim == 2 else \
                ["constant", "linear-increasing", "jump", "linear-decreasing"]
    omega = cfg["scan"]["omega"]
    return tuple(_family_entry(e, model, omega) for e in names)


def build_scan_config(cfg: dict, model) -> scan_mod.ScanConfig:
    sc = cfg["scan"]
    try:
        return scan_mod.ScanConfig(
            families=build_families(cfg, model),
            norm_space=build_norm(cfg, model),
            n_directions=int(sc["n_directions"]),
            dr=float(sc["dr"]), eps_r=float(sc["eps_r"]),
            r_max=float(sc["r_max"]), delta_num=float(sc["delta_num"]),
            horizon=sc["horizon"], solver=build_solver(cfg),
            use_symmetry=bool(sc["use_symmetry"]), seed=int(cfg["seed"]))
    except ValueError as exc:
        raise ConfigError(f"invalid scan configuration: {exc}") from exc


def _workers(cfg: dict) -> int:
    w = cfg["workers"]
    return int(w) if w is not None else (os.cpu_count() or 1)


def _outdir(cfg: dict) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands ------------------------------------------------------------------


def cmd_simulate(cfg: dict) -> int:
    t0 = time.time()
    model = build_model(cfg)
    space = build_norm(cfg, model)
    sim = cfg["simulate"]
    spec = _family_entry(sim["family"], model, cfg["scan"]["omega"])
    p = np.asarray(sim["p"], dtype=float)
    if p.size != spec.param_dim:
        raise ConfigError(
            f"family {spec.name!r} needs {spec.param_dim} parameters, got {p.size}")
    seg = families.instantiate(spec, p, model.tau)
    init = seg.offset(model.equilibrium) if np.any(model.equilibrium) else seg
    horizon = cfg["scan"]["horizon"] or 50.0 * model.tau
    opts = build_solver(cfg).with_stop(space, float(cfg["scan"]["delta_num"]))
    traj = integrate(model, init, float(horizon), opts)
    verdict, info = scan_mod.classify_detailed(traj, space, opts.delta_num)
    out = _outdir(cfg)
    exports.trajectory_csv(traj, out / "trajectory.csv")
    exports.norm_trace_csv(space, traj, out / "norm_trace.csv")
    exports.write_json(exports.verdict_json(traj, verdict, info, space),
                       out / "verdict.json")
    exports.write_manifest(out / "manifest.json", cfg, {"total": time.time() - t0})
    print(f"verdict: {verdict} (termination {traj.termination.kind} "
          f"at t = {traj.termination.t:.6g})")
    return 0


def cmd_scan(cfg: dict) -> int:
    t0 = time.time()
    model = build_model(cfg)
    sconf = build_scan_config(cfg, model)
    res = scan_mod.star_scan(model, sconf, workers=_workers(cfg))
    out = _outdir(cfg)
    exports.write_json(exports.scan_to_dict(res), out / "scan.json")
    exports.boundary_points_csv(res, out / "boundary_points.csv")
    if cfg["scan"]["pixel"]:
        for spec in sconf.families:
            if spec.param_dim != 2:
                continue
            arr = scan_mod.pixel_map(model, spec, sconf,
                                     float(cfg["scan"]["pixel_extent"]),
                                     int(cfg["scan"]["pixel_resolution"]),
                                     workers=_workers(cfg))
            exports.pixel_csv(arr, out / f"pixels_{spec.name}.csv")
    exports.write_manifest(out / "manifest.json", cfg, {"total": time.time() - t0})
    mp = res.merged_primary
    ms = res.merged_secondary
    print(f"merged bounds: primary = {mp:.6g}, secondary = {ms:.6g}")
    return 0


def cmd_spectrum(cfg: dict) -> int:
    t0 = time.time()
    model = build_model(cfg)
    prob = spectral.CharacteristicProblem.from_model(model)
    tau_max = float(cfg["spectrum"]["tau_max"])
    N = int(cfg["spectrum"]["N"])
    cset = spectral.crossings(prob)
    wins = spectral.stability_windows(prob, tau_max, N=N, cset=cset)
    out = _outdir(cfg)
    exports.write_json(exports.spectrum_to_dict(cset, wins), out / "spectrum.json")
    taus = np.linspace(tau_max / 100.0, tau_max, 100)
    exports.abscissa_csv(prob, taus, out / "abscissa.csv", N=N)
    exports.write_manifest(out / "manifest.json", cfg, {"total": time.time() - t0})
    inside = [w for w in wins if w.lo <= model.tau <= w.hi]
    state = "inside a stable window" if inside else "not in a stable window"
    print(f"tau = {model.tau:.6g} is {state}; {len(wins)} stable windows "
          f"up to tau_max = {tau_max:.6g}")
    return 0


def _hopf_for_target(prob, tau_target, N):
    wins = spectral.stability_windows(prob, tau_target * 1.2 + 1.0, N=N)
    for w in wins:
        if w.lo <= tau_target <= w.hi and w.hopf_left:
            return w
    raise RuntimeError(
        f"tau = {tau_target:.6g} is not inside a stable window with a "
        "regain-of-stability endpoint; no cycle branch to continue")


def cmd_orbit(cfg: dict) -> int:
    t0 = time.time()
    model = build_model(cfg)
    oc = cfg["orbit"]
    tau_target = float(oc["tau_target"] or model.tau)
    prob = spectral.CharacteristicProblem.from_model(model)
    win = _hopf_for_target(prob, tau_target, int(cfg["spectrum"]["N"]))
    orb0 = orbit_mod.orbit_from_hopf(model, win.hopf_left, dtau=float(oc["dtau"]),
                                     L=int(oc["L"]), m=int(oc["degree"]))
    policy = orbit_mod.StepPolicy(dtau=float(oc["dtau"]),
                                  dtau_max=float(oc["dtau_max"]))
    br = orbit_mod.continue_branch(model, orb0, tau_target, policy)
    if not br.complete:
        raise RuntimeError("continuation stalled: " + "; ".join(br.failures[-3:]))
    final = br.points[-1][1]
    spc = norms.uniform(int(cfg["norm"]["grid_density"]))
    rc, _ = orbit_mod.min_norm_on_cycle(final, spc, model.equilibrium)
    rq = None
    if model.block_I:
        spq = norms.quotient(model.block_I, int(cfg["norm"]["grid_density"]))
        rq, _ = orbit_mod.min_norm_on_cycle(final, spq, model.equilibrium)
    out = _outdir(cfg)
    od = exports.orbit_to_dict(final)
    od["R_LC_Q"] = rq
    od["R_LC_C"] = rc
    exports.write_json(od, out / "orbit.json")
    exports.orbit_profile_csv(final, out / "orbit_profile.csv")
    rows = []
    for tau_b, ob in br.points:
        rcb, _ = orbit_mod.min_norm_on_cycle(ob, spc, model.equilibrium)
        rqb = math.nan
        if model.block_I:
            rqb, _ = orbit_mod.min_norm_on_cycle(ob, spq, model.equilibrium)
        rows.append([tau_b, ob.period, rqb, rcb])
    exports.branch_csv(rows, out / "branch.csv")
    exports.write_manifest(out / "manifest.json", cfg, {"total": time.time() - t0})
    print(f"orbit at tau = {tau_target:.6g}: T = {final.period:.6g}, "
          f"residual = {final.residual:.3g}" +
          (f", R_LC_Q = {rq:.6g}" if rq is not None else "") +
          f", R_LC_C = {rc:.6g}")
    return 0


def cmd_basin(cfg: dict) -> int:
    t0 = time.time()
    model = build_model(cfg)
    bc = cfg["basin"]
    spec = families.basis_family(bc["basis"], int(bc["degree"]), dim=model.dim)
    space = build_norm(cfg, model)
    try:
        res = scan_mod.basin_stability(
            model, spec, float(bc["rho"]), int(bc["samples"]), space,
            delta_num=float(cfg["scan"]["delta_num"]), seed=int(cfg["seed"]),
            horizon=cfg["scan"]["horizon"], solver=build_solver(cfg),
            workers=_workers(cfg))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = _outdir(cfg)
    exports.write_json(exports.basin_to_dict(res), out / "basin.json")
    exports.write_manifest(out / "manifest.json", cfg, {"total": time.time() - t0})
    print(f"basin-stable fraction: {res.fraction:.4f} "
          f"(95% CI [{res.ci_low:.4f}, {res.ci_high:.4f}], n = {res.n_samples})")
    return 0


# -- reproduction presets --------------------------------------------------------


def _preset_example1(cfg: dict, out: Path) -> dict:
    fam_names = ["constant", "linear-increasing", "jump", "linear-decreasing"]
    summary = {}
    for tau in (1.0, 5.0):
        model = make_scalar_cubic(tau)
        sconf = scan_mod.ScanConfig(
            families=tuple(families.scalar_family(k) for k in fam_names),
            norm_space=norms.uniform(int(cfg["norm"]["grid_density"])),
            dr=0.1, eps_r=float(cfg["scan"]["eps_r"]), r_max=3.0,
            delta_num=float(cfg["scan"]["delta_num"]),
            solver=build_solver(cfg), use_symmetry=True)
        res = scan_mod.star_scan(model, sconf, workers=_workers(cfg))
        exports.write_json(exports.scan_to_dict(res),
                           out / f"example1_tau{tau:g}_scan.json")
        summary[f"tau={tau:g}"] = {
            "merged_primary": res.merged_primary,
            "merged_secondary": res.merged_secondary,
            "per_family": {f.family.name: f.r_primary for f in res.families},
        }
    exports.write_json(summary, out / "example1.json")
    return summary


def _preset_fig3(cfg: dict, out: Path) -> dict:
    fam_names = ["constant", "linear-increasing", "jump", "linear-decreasing"]
    solver = build_solver(cfg)
    written = []
    for tau in (1.0, 5.0):
        model = make_scalar_cubic(tau)
        rows = []
        for name in fam_names:
            spec = families.scalar_family(name)
            for p in np.arange(0.1, 1.51, 0.1):
                for sgn in (1.0, -1.0):
                    seg = families.instantiate(spec, [sgn * p], tau)
                    traj = integrate(model, seg, 20.0 * tau, solver)
                    grid = np.linspace(0.0, traj.t_end, 250)
                    for t, x in zip(grid, traj.state_values(grid)[:, 0]):
                        rows.append([name, sgn * p, t, x])
        path = out / f"fig3_tau{tau:g}.csv"
        exports.write_csv(path, ["family", "p", "t", "x"], rows)
        written.append(str(path))
    return {"files": written}


def _preset_fig4(cfg: dict, out: Path) -> dict:
    model = build_model({**cfg, "model": {**cfg["model"], "name": "swing"}})
    sconf = build_scan_config(cfg, model)
    written = []
    for spec in sconf.families:
        if spec.param_dim != 2:
            continue
        arr = scan_mod.pixel_map(model, spec, sconf,
                                 float(cfg["scan"]["pixel_extent"]),
                                 int(cfg["scan"]["pixel_resolution"]),
                                 workers=_workers(cfg))
        path = out / f"fig4_{spec.name}.csv"
        exports.pixel_csv(arr, path)
        written.append(str(path))
    return {"files": written}


def _preset_fig5(cfg: dict, out: Path) -> dict:
    model = build_model({**cfg, "model": {**cfg["model"], "name": "swing"}})
    space = build_norm(cfg, model)
    sconf = replace(build_scan_config(cfg, model),
                    families=(families.swing_family("constant"),))
    res = scan_mod.star_scan(model, sconf, workers=_workers(cfg))
    fam = res.families[0]
    if fam.secondary is None:
        raise RuntimeError("no divergent constant-family trajectory found")
    p = fam.secondary.origin_p
    seg = families.instantiate(sconf.families[0], p, model.tau)
    horizon = sconf.horizon or 50.0 * model.tau
    traj = integrate(model, seg, horizon,
                     sconf.solver.with_stop(space, sconf.delta_num))
    exports.norm_trace_csv(space, traj, out / "fig5_trace.csv")
    exports.write_json({
        "origin_p": exports._plain(p),
        "t_star": fam.secondary.t_star,
        "secondary_value": fam.secondary.value,
        "initial_segment": exports.segment_to_dict(seg),
        "minimizing_segment": exports.segment_to_dict(fam.secondary.segment,
                                                      dense=True),
    }, out / "fig5_segments.json")
    return {"secondary_value": fam.secondary.value, "t_star": fam.secondary.t_star}


def _preset_fig7(cfg: dict, out: Path, tau_max: float = 25.0) -> dict:
    model = build_model({**cfg, "model": {**cfg["model"], "name": "swing"}})
    prob = spectral.CharacteristicProblem.from_model(model)
    wins = spectral.stability_windows(prob, tau_max, N=int(cfg["spectrum"]["N"]))
    spq = norms.quotient(model.block_I, int(cfg["norm"]["grid_density"]))
    spc = norms.uniform(int(cfg["norm"]["grid_density"]))
    sconf = replace(build_scan_config(cfg, model),
                    families=(families.swing_family("constant"),))
    u_down = np.array([0.0, -1.0])
    rows = []
    branches = []
    for w in wins:
        if not w.hopf_left:
            continue
        orb0 = orbit_mod.orbit_from_hopf(model, w.hopf_left,
                                         dtau=float(cfg["orbit"]["dtau"]),
                                         L=int(cfg["orbit"]["L"]),
                                         m=int(cfg["orbit"]["degree"]))
        target = min(w.hi - 0.05, tau_max)
        br = orbit_mod.continue_branch(model, orb0, target,
                                       orbit_mod.StepPolicy(dtau=0.25, dtau_max=0.25))
        branches.append({"window": [w.lo, w.hi], "points": len(br.points),
                         "complete": br.complete})
        for tau_b, ob in br.points:
            rq, _ = orbit_mod.min_norm_on_cycle(ob, spq, model.equilibrium)
            rc, _ = orbit_mod.min_norm_on_cycle(ob, spc, model.equilibrium)
            mb = build_model({**cfg, "model": {**cfg["model"], "name": "swing",
                                               "tau": tau_b}})
            dres = scan_mod.scan_direction(mb, sconf.families[0], sconf, u_down)
            rp = dres.witness_norm if dres.witness_norm is not None else math.nan
            rs = dres.secondary.value if dres.secondary is not None else math.nan
            rows.append([tau_b, ob.period, rq, rc, rp, rs])
    rows.sort(key=lambda r: r[0])
    exports.branch_csv(rows, out / "fig7.csv")
    exports.write_json({"branches": branches, "n_rows": len(rows)},
                       out / "fig7.json")
    return {"branches": branches, "n_rows": len(rows)}


def cmd_reproduce(cfg: dict, target: str) -> int:
    t0 = time.time()
    out = _outdir(cfg)
    fns = {"example1": _preset_example1, "fig3": _preset_fig3,
           "fig4": _preset_fig4, "fig5": _preset_fig5, "fig7": _preset_fig7}
    if target not in fns:
        raise ConfigError(f"unknown reproduction target {target!r}")
    summary = fns[target](cfg, out)
    exports.write_manifest(out / "manifest.json", cfg, {"total": time.time() - t0})
    print(f"reproduced {target}: {json.dumps(exports._plain(summary), sort_keys=True)}")
    return 0


# -- argument parsing ------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", default=None, help="JSON configuration file")
    p.add_argument("--model", choices=["swing", "scalar-cubic", "file"])
    p.add_argument("--model-file", default=None, help="declarative model JSON")
    p.add_argument("--tau", type=float)
    p.add_argument("--norm", choices=["c", "m2", "q"])
    p.add_argument("--delta-num", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int)
    p.add_argument("--reproduce", choices=PRESETS, default=None,
                   help="run a reproduction preset instead of the subcommand")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="attradius",
        description="Upper bounds on the radius of attraction of equilibria "
                    "in single-delay differential equations.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate one initial function")
    _add_common(p)
    p.add_argument("--family", default=None)
    p.add_argument("--p", default=None, help="comma-separated parameters")

    p = sub.add_parser("scan", help="star scan for attraction bounds")
    _add_common(p)
    p.add_argument("--families", default=None, help="comma-separated kinds")
    p.add_argument("--n-directions", type=int)
    p.add_argument("--dr", type=float)
    p.add_argument("--eps-r", type=float)
    p.add_argument("--r-max", type=float)
    p.add_argument("--symmetry", action="store_true", default=None)
    p.add_argument("--pixel", action="store_true", default=None)
    p.add_argument("--pixel-extent", type=float)
    p.add_argument("--pixel-resolution", type=int)

    p = sub.add_parser("spectrum", help="crossings and stability windows")
    _add_common(p)
    p.add_argument("--tau-max", type=float)

    p = sub.add_parser("orbit", help="periodic-orbit branch and cycle bounds")
    _add_common(p)
    p.add_argument("--tau-target", type=float)

    p = sub.add_parser("basin", help="basin-stability sampling")
    _add_common(p)
    p.add_argument("--rho", type=float)
    p.add_argument("--samples", type=int)

    p = sub.add_parser("reproduce", help="rebuild figure-level data sets")
    _add_common(p)
    p.add_argument("target", choices=PRESETS)
    return ap


def _apply_overrides(cfg: dict, args: argparse.Namespace) -> dict:
    if args.model:
        cfg["model"]["name"] = args.model
    if args.model_file:
        cfg["model"]["file"] = args.model_file
        cfg["model"]["name"] = "file"
    if args.tau is not None:
        cfg["model"]["tau"] = args.tau
    if args.norm:
        cfg["norm"]["kind"] = args.norm
    if args.delta_num is not None:
        cfg["scan"]["delta_num"] = args.delta_num
    if args.horizon is not None:
        cfg["scan"]["horizon"] = args.horizon
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.out is not None:
        cfg["out"] = args.out
    if args.workers is not None:
        cfg["workers"] = args.workers
    for attr, path in [
        ("family", ("simulate", "family")),
        ("n_directions", ("scan", "n_directions")), ("dr", ("scan", "dr")),
        ("eps_r", ("scan", "eps_r")), ("r_max", ("scan", "r_max")),
        ("symmetry", ("scan", "use_symmetry")), ("pixel", ("scan", "pixel")),
        ("pixel_extent", ("scan", "pixel_extent")),
        ("pixel_resolution", ("scan", "pixel_resolution")),
        ("tau_max", ("spectrum", "tau_max")),
        ("tau_target", ("orbit", "tau_target")),
        ("rho", ("basin", "rho")), ("samples", ("basin", "samples")),
    ]:
        val = getattr(args, attr, None)
        if val is not None:
            cfg[path[0]][path[1]] = val
    if getattr(args, "p", None) is not None:
        try:
            cfg["simulate"]["p"] = [float(x) for x in args.p.split(",")]
        except ValueError as exc:
            raise ConfigError(f"invalid --p value: {exc}") from exc
    if getattr(args, "families", None) is not None:
        cfg["scan"]["families"] = args.families.split(",")
    return cfg


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = _apply_overrides(cfg, args)
        if args.command == "reproduce":
            return cmd_reproduce(cfg, args.target)
        if args.reproduce:
            return cmd_reproduce(cfg, args.reproduce)
        return {"simulate": cmd_simulate, "scan": cmd_scan,
                "spectrum": cmd_spectrum, "orbit": cmd_orbit,
                "basin": cmd_basin}[args.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # computation failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
