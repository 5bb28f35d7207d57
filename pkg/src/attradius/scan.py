"""Attraction classification, the star scan, secondary bounds, basin stability.

The scan tests parameterized initial functions along rays in parameter
space, marching the modulus outward until zero-convergence fails and then
bisecting. The norm of the smallest confidently non-convergent initial
function is an upper bound on the radius of attraction; the trace minima of
non-convergent trajectories (secondary initial functions) can only tighten
it.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import norms
from .dde import Model, SolverOptions, Trajectory, integrate, segment_at
from .families import FamilySpec, instantiate
from .segments import Segment

CONVERGENT = "convergent"
NONCONVERGENT = "nonconvergent"
UNDECIDED = "undecided"

#: recorded in scan metadata: how non-convergence is decided without blowup
CLASSIFIER_TAG = "final-norm>=delta and nondecreasing trend over last 5*tau"


@dataclass(frozen=True)
class ScanConfig:
    families: Tuple[FamilySpec, ...]
    norm_space: norms.NormSpace
    n_directions: int = 32
    dr: float = 0.05
    eps_r: float = 1e-3
    r_max: float = 20.0
    delta_num: float = 0.05
    horizon: Optional[float] = None          # default 50 * tau
    solver: SolverOptions = field(default_factory=SolverOptions)
    trend_window: float = 5.0                # in multiples of tau
    use_symmetry: bool = False
    seed: int = 0                            # basis-mode direction sampling

    def __post_init__(self):
        if not (self.dr > self.eps_r > 0):
            raise ValueError("need dr > eps_r > 0")
        if self.n_directions < 4:
            raise ValueError("need at least 4 directions")
        if self.r_max <= self.dr:
            raise ValueError("r_max must exceed dr")
        if self.delta_num <= 0:
            raise ValueError("delta_num must be positive")


def _shifted(seg: Segment, model: Model) -> Segment:
    if np.any(model.equilibrium):
        return seg.offset(-model.equilibrium)
    return seg


def classify(traj: Trajectory, space: norms.NormSpace, delta_num: float) -> str:
    """Convergent / NonConvergent / Undecided against the numerical domain."""
    verdict, _ = classify_detailed(traj, space, delta_num)
    return verdict


def classify_detailed(traj: Trajectory, space: norms.NormSpace, delta_num: float,
                      trend_window: float = 5.0):
    if traj.termination.kind == "converged":
        return CONVERGENT, {"reason": "stop-ball"}
    if traj.termination.kind == "blowup":
        return NONCONVERGENT, {"reason": "blowup", "t": traj.termination.t}
    te = traj.t_end
    final_norm = norms.norm(space, _shifted(segment_at(traj, te), traj.model))
    if final_norm < delta_num:
        return CONVERGENT, {"reason": "final-norm", "final_norm": final_norm}
    t0 = max(0.0, te - trend_window * traj.model.tau)
    ts, vals = norms.norm_trace(space, traj, t0=t0, t1=te)
    slope = float(np.polyfit(ts, vals, 1)[0]) if ts.size >= 2 else 0.0
    info = {"final_norm": final_norm, "trend_slope": slope}
    if slope >= 0.0:
        info["reason"] = "trend"
        return NONCONVERGENT, info
    info["reason"] = "decreasing-but-above-delta"
    return UNDECIDED, info


def _parabolic_refine(x: np.ndarray, y: np.ndarray, i: int) -> float:
    """Vertex of the parabola through points i-1, i, i+1 (clamped)."""
    if i <= 0 or i >= x.size - 1:
        return float(x[i])
    x0, x1, x2 = x[i - 1], x[i], x[i + 1]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = (x0 - x1) * (y1 - y2) - (x1 - x2) * (y0 - y1)
    if denom == 0.0:
        return float(x1)
    num = (x0 - x1) ** 2 * (y1 - y2) - (x1 - x2) ** 2 * (y0 - y1)
    xs = x1 - 0.5 * num / denom
    return float(min(max(xs, x0), x2))


@dataclass
class TraceMinimum:
    value: float
    t_star: float
    segment: Segment
    origin_p: Optional[np.ndarray] = None  # parameters of the originating member


def trace_minimum(traj: Trajectory, space: norms.NormSpace) -> TraceMinimum:
    """min over t of ||x_t|| for one trajectory, with parabolic refinement.

    The reported value is the exactly re-evaluated norm of an actual state,
    so it is always a valid witness value; t = 0 is always a candidate.
    """
    ts, vals = norms.norm_trace(space, traj, t0=0.0, t1=traj.t_end)
    i = int(np.argmin(vals))
    candidates = {0.0, float(ts[i]), _parabolic_refine(ts, vals, i)}
    best_v = math.inf
    best_t = 0.0
    for tc in sorted(candidates):
        v = norms.norm(space, _shifted(segment_at(traj, tc), traj.model))
        if v < best_v:
            best_v = v
            best_t = tc
    return TraceMinimum(best_v, best_t, segment_at(traj, best_t))


def secondary_bound(trajectories: Sequence[Trajectory], space: norms.NormSpace):
    """Minimum state norm over non-convergent trajectories (inf over none).

    Returns (value, (trajectory index, t_star), minimizing segment).
    """
    best = (math.inf, (-1, 0.0), None)
    for k, traj in enumerate(trajectories):
        tm = trace_minimum(traj, space)
        if tm.value < best[0]:
            best = (tm.value, (k, tm.t_star), tm.segment)
    return best


# -- star scan ---------------------------------------------------------------


@dataclass
class DirectionResult:
    direction: np.ndarray
    trace: List[Tuple[float, str]]
    witness_r: Optional[float]          # modulus of first non-convergent point
    witness_norm: Optional[float]       # its norm in the scan space
    witness_p: Optional[np.ndarray]
    n_undecided: int
    secondary: Optional[TraceMinimum]   # best trace minimum along this ray


@dataclass
class FamilyResult:
    family: FamilySpec
    directions: List[DirectionResult]
    r_primary: float
    secondary: Optional[TraceMinimum]
    secondary_witness_p: Optional[np.ndarray]
    witness_segment: Optional[Segment] = None  # the argmin primary witness

    @property
    def r_secondary(self) -> float:
        return self.secondary.value if self.secondary else math.inf


@dataclass
class ScanResult:
    model_name: str
    config: ScanConfig
    families: List[FamilyResult]
    merged_primary: float
    merged_secondary: float
    classifier: str = CLASSIFIER_TAG

    @property
    def merged(self) -> float:
        return min(self.merged_primary, self.merged_secondary)


def directions_for(spec: FamilySpec, n_directions: int, symmetric: bool,
                   seed: int) -> np.ndarray:
    """Unit direction set in the family's parameter space."""
    m = spec.param_dim
    if m == 1:
        return np.array([[1.0]]) if symmetric else np.array([[1.0], [-1.0]])
    if m == 2:
        k = n_directions
        ang = np.linspace(0.0, math.pi if symmetric else 2.0 * math.pi, k,
                          endpoint=False)
        return np.column_stack([np.cos(ang), np.sin(ang)])
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((n_directions, m))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    if symmetric:
        u = u[: max(1, n_directions // 2)]
    return u


def _solver_for(model: Model, cfg: ScanConfig) -> SolverOptions:
    return replace(cfg.solver, stop_space=cfg.norm_space, delta_num=cfg.delta_num)


def scan_direction(model: Model, spec: FamilySpec, cfg: ScanConfig,
                   u: np.ndarray) -> DirectionResult:
    horizon = cfg.horizon if cfg.horizon is not None else 50.0 * model.tau
    opts = _solver_for(model, cfg)
    eq = model.equilibrium
    shift = np.any(eq)

    def probe(r: float):
        p = r * u
        seg = instantiate(spec, p, model.tau)
        init = seg.offset(eq) if shift else seg
        traj = integrate(model, init, horizon, opts)
        verdict, _ = classify_detailed(traj, cfg.norm_space, cfg.delta_num,
                                       cfg.trend_window)
        return p, seg, traj, verdict

    trace: List[Tuple[float, str]] = []
    n_und = 0
    secondary_best: Optional[TraceMinimum] = None

    def note_secondary(traj, p):
        nonlocal secondary_best
        tm = trace_minimum(traj, cfg.norm_space)
        tm.origin_p = np.asarray(p, dtype=float)
        if secondary_best is None or tm.value < secondary_best.value:
            secondary_best = tm

    r_lo = 0.0
    r_hi = None
    witness = None
    r = cfg.dr
    while r <= cfg.r_max + 1e-12 * cfg.r_max:
        p, seg, traj, verdict = probe(r)
        trace.append((r, verdict))
        if verdict == NONCONVERGENT:
            r_hi = r
            witness = (r, p, seg, traj)
            break
        if verdict == UNDECIDED:
            n_und += 1
        r_lo = r
        r = r + cfg.dr
    if r_hi is None:
        return DirectionResult(u, trace, None, None, None, n_und, None)

    note_secondary(witness[3], witness[1])
    while r_hi - r_lo > cfg.eps_r:
        rm = 0.5 * (r_lo + r_hi)
        p, seg, traj, verdict = probe(rm)
        trace.append((rm, verdict))
        if verdict == NONCONVERGENT:
            r_hi = rm
            witness = (rm, p, seg, traj)
            note_secondary(traj, p)
        else:
            if verdict == UNDECIDED:
                n_und += 1
            r_lo = rm

    r_w, p_w, seg_w, _ = witness
    w_norm = norms.norm(cfg.norm_space, seg_w)
    return DirectionResult(u, trace, r_w, w_norm, p_w, n_und, secondary_best)


def _direction_task(args):
    model, spec, cfg, u, fam_idx, dir_idx = args
    return fam_idx, dir_idx, scan_direction(model, spec, cfg, u)


def star_scan(model: Model, cfg: ScanConfig, workers: int = 1) -> ScanResult:
    """March each ray outward to the first non-convergent member, bisect, and
    merge family bounds; non-convergent trajectories feed secondary bounds."""
    tasks = []
    dir_sets = []
    for fi, spec in enumerate(cfg.families):
        symmetric = cfg.use_symmetry and model.odd_symmetric and spec.symmetric
        dirs = directions_for(spec, cfg.n_directions, symmetric, cfg.seed + fi)
        dir_sets.append(dirs)
        for di, u in enumerate(dirs):
            tasks.append((model, spec, cfg, u, fi, di))

    results: dict = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for fi, di, res in pool.map(_direction_task, tasks, chunksize=1):
                results[(fi, di)] = res
    else:
        for t in tasks:
            fi, di, res = _direction_task(t)
            results[(fi, di)] = res

    fam_results = []
    for fi, spec in enumerate(cfg.families):
        dres = [results[(fi, di)] for di in range(len(dir_sets[fi]))]
        with_witness = [d for d in dres if d.witness_norm is not None]
        r_primary = min((d.witness_norm for d in with_witness), default=math.inf)
        wit_seg = None
        if with_witness:
            argmin_dir = min(with_witness, key=lambda d: d.witness_norm)
            wit_seg = instantiate(spec, argmin_dir.witness_p, model.tau)
        sec = None
        sec_p = None
        for d in dres:
            if d.secondary is not None and (sec is None or d.secondary.value < sec.value):
                sec = d.secondary
                sec_p = d.secondary.origin_p
        fam_results.append(FamilyResult(spec, dres, r_primary, sec, sec_p,
                                        witness_segment=wit_seg))

    merged_p = min((f.r_primary for f in fam_results), default=math.inf)
    merged_s = min((f.r_secondary for f in fam_results), default=math.inf)
    return ScanResult(model.name, cfg, fam_results, merged_p, merged_s)


# -- basin stability ---------------------------------------------------------


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054):
    """95% Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    phat = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (phat + z2 / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z2 / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class BasinResult:
    fraction: float
    ci_low: float
    ci_high: float
    n_samples: int
    n_convergent: int
    n_undecided: int
    seed: int


def _basin_task(args):
    model, spec, cfg, samples, base_idx = args
    horizon = cfg.horizon if cfg.horizon is not None else 50.0 * model.tau
    opts = _solver_for(model, cfg)
    eq = model.equilibrium
    out = []
    for k, p in enumerate(samples):
        seg = instantiate(spec, p, model.tau)
        init = seg.offset(eq) if np.any(eq) else seg
        traj = integrate(model, init, horizon, opts)
        verdict, _ = classify_detailed(traj, cfg.norm_space, cfg.delta_num,
                                       cfg.trend_window)
        out.append((base_idx + k, verdict))
    return out


def basin_stability(model: Model, spec: FamilySpec, rho: float, n_samples: int,
                    space: norms.NormSpace, delta_num: float = 0.05,
                    seed: int = 0, horizon: Optional[float] = None,
                    solver: Optional[SolverOptions] = None,
                    workers: int = 1) -> BasinResult:
    """Convergent fraction of a uniform coefficient-ball sample (Wilson 95%)."""
    if n_samples < 100:
        raise ValueError("need at least 100 samples")
    if rho <= 0:
        raise ValueError("sample ball radius must be positive")
    m = spec.param_dim
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((n_samples, m))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    radii = rho * rng.random(n_samples) ** (1.0 / m)
    samples = raw * radii[:, None]

    cfg = ScanConfig(families=(spec,), norm_space=space, delta_num=delta_num,
                     horizon=horizon, solver=solver or SolverOptions())
    chunks = []
    step = max(1, n_samples // max(1, workers * 4))
    for i0 in range(0, n_samples, step):
        chunks.append((model, spec, cfg, samples[i0:i0 + step], i0))
    verdicts = [None] * n_samples
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk_out in pool.map(_basin_task, chunks):
                for idx, v in chunk_out:
                    verdicts[idx] = v
    else:
        for ch in chunks:
            for idx, v in _basin_task(ch):
                verdicts[idx] = v
    n_conv = sum(v == CONVERGENT for v in verdicts)
    n_und = sum(v == UNDECIDED for v in verdicts)
    lo, hi = wilson_interval(n_conv, n_samples)
    return BasinResult(n_conv / n_samples, lo, hi, n_samples, n_conv, n_und, seed)


# -- exhaustive pixel map (opt-in) -------------------------------------------


def pixel_map(model: Model, spec: FamilySpec, cfg: ScanConfig,
              extent: float, resolution: int, workers: int = 1) -> np.ndarray:
    """Verdict grid over the (p1, p2) plane; rows (p1, p2, verdict code).

    Exhaustive and expensive; the star scan is the default search mode.
    """
    if spec.param_dim != 2:
        raise ValueError("pixel maps need a two-parameter family")
    grid = np.linspace(-extent, extent, resolution)
    ps = np.array([[p1, p2] for p2 in grid for p1 in grid])
    chunks = []
    step = max(1, len(ps) // max(1, workers * 8))
    for i0 in range(0, len(ps), step):
        chunks.append((model, spec, cfg, ps[i0:i0 + step], i0))
    codes = {CONVERGENT: 1, NONCONVERGENT: 0, UNDECIDED: 2}
    out = np.empty((len(ps), 3))
    out[:, :2] = ps
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk_out in pool.map(_basin_task, chunks):
                for idx, v in chunk_out:
                    out[idx, 2] = codes[v]
    else:
        for ch in chunks:
            for idx, v in _basin_task(ch):
                out[idx, 2] = codes[v]
    return out
