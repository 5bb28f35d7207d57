"""Deterministic CSV/JSON serialization of results.

All JSON output is sorted-key, indent-2, with numpy types converted to
plain Python; infinite bounds serialize as null. Timings and environment
info go to the run manifest only, so result files are byte-identical across
reruns with the same seed and configuration.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import platform
from pathlib import Path
from typing import Optional

import numpy as np

from . import norms
from .dde import Trajectory
from .orbit import PeriodicOrbit
from .scan import BasinResult, ScanResult, TraceMinimum
from .segments import Segment


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return None if math.isinf(f) or math.isnan(f) else f
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(obj, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_plain(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path, header, rows) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def config_hash(config: dict) -> str:
    canon = json.dumps(_plain(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def write_manifest(path, config: dict, timings: dict) -> None:
    from . import __version__

    write_json({
        "config_hash": config_hash(config),
        "package_version": __version__,
        "python_version": platform.python_version(),
        "timings_seconds": {k: round(v, 3) for k, v in timings.items()},
    }, path)


# -- segments ------------------------------------------------------------------


def segment_to_dict(seg: Segment, dense: bool = False) -> dict:
    """JSON shape reusable as an initial function (piecewise Hermite table)."""
    knots, vals, ders = seg.table()
    if dense and knots.size > 4096:
        step = knots.size // 2048
        knots, vals, ders = knots[::step], vals[::step], ders[::step]
    return {
        "tau": seg.tau,
        "knots": knots.tolist(),
        "values": vals.tolist(),
        "derivs": ders.tolist(),
        "breakpoints": seg.breakpoints.tolist(),
    }


def segment_from_dict(d: dict) -> Segment:
    knots = np.asarray(d["knots"], dtype=float)
    vals = np.asarray(d["values"], dtype=float)
    if "derivs" in d and d["derivs"] is not None:
        ders = np.asarray(d["derivs"], dtype=float)
    else:
        ders = np.gradient(vals, knots, axis=0)
    return Segment.from_table(knots, vals, ders,
                              breakpoints=d.get("breakpoints"))


# -- trajectories --------------------------------------------------------------


def trajectory_csv(traj: Trajectory, path, n_uniform: int = 1000) -> None:
    """Columns t, x_1..x_n on a uniform grid merged with all mesh points."""
    grid = np.union1d(np.linspace(0.0, traj.t_end, n_uniform + 1), traj.mesh)
    X = traj.state_values(grid)
    header = ["t"] + [f"x_{i + 1}" for i in range(traj.model.dim)]
    write_csv(path, header, np.column_stack([grid, X]))


def norm_trace_csv(space: norms.NormSpace, traj: Trajectory, path) -> None:
    ts, vals = norms.norm_trace(space, traj)
    write_csv(path, ["t", "norm"], np.column_stack([ts, vals]))


def verdict_json(traj: Trajectory, verdict: str, info: dict, space: norms.NormSpace) -> dict:
    return {
        "verdict": verdict,
        "termination": {"kind": traj.termination.kind, "t": traj.termination.t},
        "t_end": traj.t_end,
        "norm": space.label,
        "detail": _plain(info),
    }


# -- scans ---------------------------------------------------------------------


def _trace_min_dict(tm: Optional[TraceMinimum]) -> Optional[dict]:
    if tm is None:
        return None
    return {
        "value": tm.value,
        "t_star": tm.t_star,
        "origin_p": _plain(tm.origin_p),
        "segment": segment_to_dict(tm.segment, dense=True),
    }


def scan_to_dict(res: ScanResult) -> dict:
    fams = []
    for f in res.families:
        dirs = []
        for d in f.directions:
            dirs.append({
                "direction": _plain(d.direction),
                "witness_r": d.witness_r,
                "witness_norm": d.witness_norm,
                "witness_p": _plain(d.witness_p),
                "n_undecided": d.n_undecided,
                "trace": [[r, v] for r, v in d.trace],
            })
        fams.append({
            "family": f.family.name,
            "r_primary": None if math.isinf(f.r_primary) else f.r_primary,
            "r_secondary": None if math.isinf(f.r_secondary) else f.r_secondary,
            "secondary": _trace_min_dict(f.secondary),
            "witness_segment": (segment_to_dict(f.witness_segment, dense=True)
                                if f.witness_segment is not None else None),
            "directions": dirs,
        })
    return {
        "model": res.model_name,
        "norm": res.config.norm_space.label,
        "delta_num": res.config.delta_num,
        "classifier": res.classifier,
        "merged_primary": None if math.isinf(res.merged_primary) else res.merged_primary,
        "merged_secondary": None if math.isinf(res.merged_secondary) else res.merged_secondary,
        "families": fams,
    }


def boundary_points_csv(res: ScanResult, path) -> None:
    """First non-convergent parameter point along every scanned ray."""
    rows = []
    for f in res.families:
        for d in f.directions:
            if d.witness_p is None:
                continue
            p = list(np.atleast_1d(d.witness_p))
            p = p + [math.nan] * (2 - len(p)) if len(p) < 2 else p[:2]
            rows.append([f.family.name, p[0], p[1], d.witness_norm])
    write_csv(path, ["family", "p1", "p2", "norm"], rows)


def pixel_csv(arr: np.ndarray, path) -> None:
    write_csv(path, ["p1", "p2", "verdict"],
              [[a, b, int(c)] for a, b, c in arr])


# -- spectrum ------------------------------------------------------------------


def spectrum_to_dict(cset, windows) -> dict:
    return {
        "crossings": [
            {"omega": br.omega, "taus": _plain(br.taus),
             "directions": _plain(br.directions)}
            for br in cset.branches
        ],
        "stable_windows": [
            {"lo": w.lo, "hi": w.hi, "abscissa_mid": w.abscissa_mid,
             "hopf_left": _plain(list(w.hopf_left)) if w.hopf_left else None,
             "consistent": w.consistent}
            for w in windows
        ],
    }


def abscissa_csv(prob, taus, path, N: int = 32) -> None:
    from dataclasses import replace

    from .spectral import spectral_abscissa

    rows = []
    for t in taus:
        rows.append([t, spectral_abscissa(replace(prob, tau=float(t)), N=N)])
    write_csv(path, ["tau", "abscissa"], rows)


# -- orbits --------------------------------------------------------------------


def orbit_to_dict(orb: PeriodicOrbit) -> dict:
    return {
        "tau": orb.tau,
        "period": orb.period,
        "delay_ratio": orb.delay_ratio,
        "L": orb.L,
        "degree": orb.degree,
        "residual": orb.residual,
        "closure_gap": orb.closure_gap,
        "nodes": _plain(orb.nodes),
    }


def orbit_profile_csv(orb: PeriodicOrbit, path, n: int = 400) -> None:
    that = np.linspace(0.0, 1.0, n + 1)
    Z = orb.eval(that)
    header = ["that"] + [f"z_{i + 1}" for i in range(orb.dim)]
    write_csv(path, header, np.column_stack([that, Z]))


def branch_csv(rows, path) -> None:
    """Rows (tau, T, R_LC_Q, R_LC_C [, R_primary, R_secondary])."""
    header = ["tau", "T", "R_LC_Q", "R_LC_C", "R_primary", "R_secondary"]
    out = []
    for row in rows:
        row = list(row) + [math.nan] * (6 - len(row))
        out.append(row)
    write_csv(path, header, out)


def basin_to_dict(res: BasinResult) -> dict:
    return {
        "fraction": res.fraction,
        "wilson_95": [res.ci_low, res.ci_high],
        "n_samples": res.n_samples,
        "n_convergent": res.n_convergent,
        "n_undecided": res.n_undecided,
        "seed": res.seed,
    }
