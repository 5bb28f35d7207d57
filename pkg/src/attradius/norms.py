"""Segment norms: uniform (C/PC), M^2, and the quotient norm Q.

The quotient norm treats state components whose history never enters the
dynamics as represented by their instantaneous value only:

    ||phi||_Q = sqrt( ||phi_I||_C^2 + |phi_II(0)|_2^2 )

with block I the delayed (history-relevant) components and block II the
rest. Sup norms are evaluated by grid sampling (all breakpoints and both
one-sided limits included) followed by golden-section refinement in the
bracketing grid cell; the M^2 integral uses composite Simpson split at
breakpoints.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .segments import Segment

_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class NormSpace:
    """A tagged, evaluable norm definition.

    kind: "c" (uniform), "m2", or "q" (quotient). For "q", ``block_I`` holds
    the zero-based indices of the delayed block; the complement is block II
    and contributes through its value at theta = 0 only.
    """

    kind: str
    block_I: Optional[Tuple[int, ...]] = None
    grid_density: int = 128

    def __post_init__(self):
        if self.kind not in ("c", "m2", "q"):
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.grid_density < 16:
            raise ValueError("grid_density must be at least 16")
        if self.kind == "q":
            if not self.block_I:
                raise ValueError("quotient norm needs a nonempty delayed block")
            object.__setattr__(self, "block_I", tuple(sorted(set(self.block_I))))
        elif self.block_I is not None:
            raise ValueError("block partition only applies to the quotient norm")

    @property
    def label(self) -> str:
        return {"c": "C", "m2": "M2", "q": "Q"}[self.kind]


def uniform(grid_density: int = 128) -> NormSpace:
    return NormSpace("c", grid_density=grid_density)


def m2(grid_density: int = 128) -> NormSpace:
    return NormSpace("m2", grid_density=grid_density)


def quotient(block_I, grid_density: int = 128) -> NormSpace:
    return NormSpace("q", block_I=tuple(block_I), grid_density=grid_density)


def _check_partition(space: NormSpace, dim: int):
    if space.kind != "q":
        return
    idx = np.asarray(space.block_I, dtype=int)
    if idx.size == 0 or idx.min() < 0 or idx.max() >= dim:
        raise ValueError("block indices out of range for segment dimension")
    if idx.size >= dim:
        raise ValueError("block II must be nonempty for the quotient norm")


def _golden_max(fun, a: float, b: float, iters: int = 48) -> float:
    """Golden-section maximum of a scalar function on [a, b]."""
    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    f1 = fun(x1)
    f2 = fun(x2)
    for _ in range(iters):
        if f1 < f2:
            a = x1
            x1, f1 = x2, f2
            x2 = a + _INV_PHI * (b - a)
            f2 = fun(x2)
        else:
            b = x2
            x2, f2 = x1, f1
            x1 = b - _INV_PHI * (b - a)
            f1 = fun(x1)
        if b - a < 1e-12 * max(1.0, abs(a) + abs(b)):
            break
    return max(f1, f2)


def _piece_edges(seg: Segment) -> np.ndarray:
    edges = np.concatenate([[-seg.tau], seg.breakpoints, [0.0]])
    return np.unique(edges)


def _sup_norm(seg: Segment, cols: Optional[np.ndarray], grid_density: int) -> float:
    """sup over [-tau, 0] of the euclidean norm of (a column subset of) phi."""

    def point_mag(th: float) -> float:
        v = seg.eval(np.array([th]))[0]
        if cols is not None:
            v = v[cols]
        return float(np.sqrt(np.dot(v, v)))

    edges = _piece_edges(seg)
    best = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        npts = max(4, int(np.ceil(grid_density * (b - a) / seg.tau)) + 1)
        th = np.linspace(a, b, npts)
        vals = seg.eval(th)
        vals[-1] = seg.eval_left(np.array([b]))[0]
        if cols is not None:
            vals = vals[:, cols]
        mags = np.sqrt(np.sum(vals * vals, axis=1))
        i = int(np.argmax(mags))
        best = max(best, float(mags[i]))
        lo = th[max(i - 1, 0)]
        hi = th[min(i + 1, npts - 1)]
        if hi > lo:
            best = max(best, _golden_max(point_mag, lo, hi))
    # right-hand limit at 0 and at every breakpoint is covered by eval();
    # the left limits were spliced in above
    v0 = seg.eval(np.array([0.0]))[0]
    if cols is not None:
        v0 = v0[cols]
    return max(best, float(np.sqrt(np.dot(v0, v0))))


def _l2sq_integral(seg: Segment, grid_density: int) -> float:
    """integral over [-tau, 0] of |phi(theta)|_2^2, composite Simpson."""
    edges = _piece_edges(seg)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        half = max(2, int(np.ceil(grid_density * (b - a) / seg.tau / 2)))
        npts = 2 * half + 1
        th = np.linspace(a, b, npts)
        vals = seg.eval(th)
        vals[-1] = seg.eval_left(np.array([b]))[0]
        q = np.sum(vals * vals, axis=1)
        h = (b - a) / (npts - 1)
        total += h / 3.0 * (q[0] + q[-1] + 4.0 * np.sum(q[1:-1:2]) + 2.0 * np.sum(q[2:-2:2]))
    return total


def norm(space: NormSpace, seg: Segment) -> float:
    """Evaluate the space's norm on a segment."""
    _check_partition(space, seg.dim)
    if space.kind == "c":
        return _sup_norm(seg, None, space.grid_density)
    if space.kind == "m2":
        v0 = seg.eval(np.array([0.0]))[0]
        return float(np.sqrt(np.dot(v0, v0))) + float(np.sqrt(_l2sq_integral(seg, space.grid_density)))
    cols_I = np.asarray(space.block_I, dtype=int)
    cols_II = np.setdiff1d(np.arange(seg.dim), cols_I)
    sup_I = _sup_norm(seg, cols_I, space.grid_density)
    v0 = seg.eval(np.array([0.0]))[0][cols_II]
    return float(np.sqrt(sup_I ** 2 + np.dot(v0, v0)))


def rescale_delay(seg: Segment, tau_new: float) -> Segment:
    """Delay-normalizing reparametrization phi_hat(s) = phi(s * tau/tau_new)."""
    return seg.rescaled(tau_new)


def stop_mode_and_mask(space: Optional[NormSpace], dim: int):
    """Map a norm space onto the kernel's stop-check mode and block mask."""
    from . import _kernel

    if space is None:
        return _kernel.STOP_NONE, np.ones(dim, dtype=np.bool_)
    _check_partition(space, dim)
    mask = np.ones(dim, dtype=np.bool_)
    if space.kind == "c":
        return _kernel.STOP_C, mask
    if space.kind == "m2":
        return _kernel.STOP_M2, mask
    mask[:] = False
    mask[np.asarray(space.block_I, dtype=int)] = True
    return _kernel.STOP_Q, mask


def norm_trace(space: NormSpace, traj, t0: float = 0.0, t1: Optional[float] = None,
               dt: Optional[float] = None):
    """Sampled trace t -> ||x_t|| over [t0, t1] on a grid of step tau/grid_density.

    Fast sliding-window evaluation on a shared fine sampling of the solution;
    grid-level accuracy (no golden refinement). Returns (times, values).
    """
    tau = traj.model.tau
    dim = traj.model.dim
    _check_partition(space, dim)
    if t1 is None:
        t1 = traj.t_end
    t1 = min(t1, traj.t_end)
    if dt is None:
        dt = tau / space.grid_density
    win = int(round(tau / dt))
    dt = tau / win
    n_tr = max(0, int(np.floor((t1 - t0) / dt))) + 1
    u = t0 - tau + dt * np.arange(n_tr + win)
    x = traj.state_values(u) - traj.model.equilibrium
    q = x * x
    if space.kind == "q":
        cols_I = np.asarray(space.block_I, dtype=int)
        cols_II = np.setdiff1d(np.arange(dim), cols_I)
        q1 = q[:, cols_I].sum(axis=1)
        q2 = q[:, cols_II].sum(axis=1)
    else:
        q1 = q.sum(axis=1)
        q2 = None
    times = t0 + dt * np.arange(n_tr)
    W = win + 1
    from numpy.lib.stride_tricks import sliding_window_view

    if space.kind == "c":
        vals = np.sqrt(sliding_window_view(q1, W).max(axis=1))
    elif space.kind == "q":
        vals = np.sqrt(sliding_window_view(q1, W).max(axis=1) + q2[win:])
    else:
        c = np.concatenate([[0.0], np.cumsum(0.5 * (q1[1:] + q1[:-1]) * dt)])
        integ = c[win:] - c[:-win]
        vals = np.sqrt(q1[win:]) + np.sqrt(integ)
    return times, vals[: times.size]
