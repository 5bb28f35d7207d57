"""Forward integration of ``x'(t) = f(x(t), x(t - tau))`` from an arbitrary
(possibly discontinuous) initial segment.

The scheme is an explicit embedded Runge-Kutta 3(2) pair (Bogacki-Shampine)
with a cubic Hermite continuous extension. Delayed values are always read
from the continuous extension (or from the initial segment while t <= tau);
since the step size is capped at the delay, the delayed argument never falls
inside the current step and the method stays explicit. Mesh points are
forced onto propagated discontinuity times ``theta_b + k*tau`` until the
smoothing order exceeds the method order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Tuple

import numpy as np

from . import _kernel, norms
from .segments import Segment


class StepUnderflowError(RuntimeError):
    """Step size fell below the configured floor at time ``t``."""

    def __init__(self, t: float):
        super().__init__(f"integration step size underflow at t = {t:.6g}")
        self.t = t


@dataclass(frozen=True)
class Termination:
    kind: str  # "converged" | "horizon" | "blowup"
    t: float

    @classmethod
    def converged_at(cls, t: float) -> "Termination":
        return cls("converged", t)

    @classmethod
    def horizon(cls, t: float) -> "Termination":
        return cls("horizon", t)

    @classmethod
    def blowup(cls, t: float) -> "Termination":
        return cls("blowup", t)


@dataclass(frozen=True)
class SolverOptions:
    """Error control, stop-ball and blowup settings for :func:`integrate`."""

    rtol: float = 1e-6
    atol: float = 1e-9
    max_step: Optional[float] = None   # default tau / 4
    min_step: Optional[float] = None   # default 1e-12 * max(tau, 1)
    first_step: Optional[float] = None
    r_div: float = 1e3
    delta_num: float = 0.0             # 0 disables the stop ball
    stop_space: Optional[norms.NormSpace] = None
    k_smooth: int = 4
    stop_samples: int = 64

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")
        if self.delta_num < 0:
            raise ValueError("delta_num must be nonnegative")
        if self.r_div <= 0:
            raise ValueError("blowup bound must be positive")

    def with_stop(self, space: norms.NormSpace, delta_num: float) -> "SolverOptions":
        return replace(self, stop_space=space, delta_num=delta_num)


@dataclass
class Model:
    """A single-delay system with metadata used across the tool chain.

    ``rhs`` maps (x, x_delayed) to dx/dt. Built-in models also carry a kernel
    dispatch code so the JIT integration loop can evaluate them without
    calling back into Python; models with only a Python callable use the
    (slower) reference integrator.
    """

    dim: int
    tau: float
    rhs: Optional[Callable] = None
    equilibrium: np.ndarray = None
    jacobians: Optional[Tuple[np.ndarray, np.ndarray]] = None
    char_poly: Optional[Tuple[np.ndarray, np.ndarray]] = None  # (P, Q), low->high
    char_fn: Optional[Callable] = None
    rhs_jac: Optional[Callable] = None
    block_I: Optional[Tuple[int, ...]] = None  # delayed block (quotient metadata)
    odd_symmetric: bool = False
    name: str = "model"
    kernel_kind: int = 0
    kernel_params: np.ndarray = field(default_factory=lambda: np.empty(0))
    kernel_ti: np.ndarray = field(default_factory=lambda: _kernel._EMPTY_I)
    kernel_tf: np.ndarray = field(default_factory=lambda: _kernel._EMPTY_F)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be at least 1")
        if self.tau <= 0:
            raise ValueError("delay must be positive")
        if self.equilibrium is None:
            self.equilibrium = np.zeros(self.dim)
        self.equilibrium = np.asarray(self.equilibrium, dtype=float).reshape(self.dim)
        if self.rhs is None and self.kernel_kind == 0:
            raise ValueError("model needs a right-hand side")
        fe = self.f(self.equilibrium, self.equilibrium)
        if np.max(np.abs(fe)) > 1e-8 * (1.0 + np.max(np.abs(self.equilibrium))):
            raise ValueError("equilibrium is not a root of the right-hand side")

    def f(self, x, xd) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        xd = np.asarray(xd, dtype=float)
        if self.kernel_kind:
            out = np.empty(self.dim)
            _kernel.rhs_eval(self.kernel_kind, self.kernel_params,
                             self.kernel_ti, self.kernel_tf, x, xd, out)
            return out
        return np.asarray(self.rhs(x, xd), dtype=float)

    def jac(self, x, xd) -> Tuple[np.ndarray, np.ndarray]:
        """Jacobians (d f/d x, d f/d x_delayed) at an arbitrary point."""
        if self.rhs_jac is not None:
            J0, J1 = self.rhs_jac(np.asarray(x, float), np.asarray(xd, float))
            return np.asarray(J0, float), np.asarray(J1, float)
        return (_fd_jac(lambda z: self.f(z, xd), np.asarray(x, float)),
                _fd_jac(lambda z: self.f(x, z), np.asarray(xd, float)))

    def linearization(self) -> Tuple[np.ndarray, np.ndarray]:
        """(A0, A1) at the equilibrium; finite differences if not supplied."""
        if self.jacobians is not None:
            return (np.asarray(self.jacobians[0], float),
                    np.asarray(self.jacobians[1], float))
        return self.jac(self.equilibrium, self.equilibrium)

    def characteristic(self, lam: complex, tau: Optional[float] = None) -> complex:
        tau = self.tau if tau is None else tau
        if self.char_fn is not None:
            return self.char_fn(lam, tau)
        if self.char_poly is not None:
            P, Q = self.char_poly
            return (np.polyval(P[::-1], lam)
                    + np.polyval(Q[::-1], lam) * np.exp(-lam * tau))
        A0, A1 = self.linearization()
        M = lam * np.eye(self.dim) - A0 - A1 * np.exp(-lam * tau)
        return complex(np.linalg.det(M))


def _fd_jac(fun, x0, rel=1e-6):
    n = x0.size
    J = np.empty((n, n))
    for j in range(n):
        h = rel * (1.0 + abs(x0[j]))
        xp = x0.copy()
        xm = x0.copy()
        xp[j] += h
        xm[j] -= h
        J[:, j] = (np.asarray(fun(xp), float) - np.asarray(fun(xm), float)) / (2 * h)
    return J


def hermite_eval(knots, vals, ders, t, side: str = "right", want_deriv: bool = False):
    """Vectorized piecewise cubic Hermite evaluation (numpy twin of the JIT one).

    Duplicated knots carry one-sided data; ``side`` picks the limit at exact
    knot hits.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    nk = len(knots)
    pos = np.searchsorted(knots, t, side=side)
    idx = np.clip(pos - 1, 0, nk - 2)
    t0 = knots[idx]
    t1 = knots[idx + 1]
    h = t1 - t0
    degen = h <= 0.0
    hs = np.where(degen, 1.0, h)
    s = np.where(degen, 0.0, (t - t0) / hs)
    s2 = s * s
    s3 = s2 * s
    a0 = (2 * s3 - 3 * s2 + 1)[:, None]
    a1 = (s3 - 2 * s2 + s)[:, None]
    b0 = (-2 * s3 + 3 * s2)[:, None]
    b1 = (s3 - s2)[:, None]
    hcol = hs[:, None]
    out = (a0 * vals[idx] + hcol * a1 * ders[idx]
           + b0 * vals[idx + 1] + hcol * b1 * ders[idx + 1])
    if np.any(degen):
        src = idx + (0 if side == "left" else 1)
        out[degen] = vals[src[degen]]
    if not want_deriv:
        return out
    da0 = ((6 * s2 - 6 * s) / hs)[:, None]
    da1 = (3 * s2 - 4 * s + 1)[:, None]
    db0 = ((-6 * s2 + 6 * s) / hs)[:, None]
    db1 = (3 * s2 - 2 * s)[:, None]
    dout = (da0 * vals[idx] + da1 * ders[idx]
            + db0 * vals[idx + 1] + db1 * ders[idx + 1])
    if np.any(degen):
        src = idx + (0 if side == "left" else 1)
        dout[degen] = ders[src[degen]]
    return out, dout


@dataclass
class Trajectory:
    """A computed solution with dense output.

    The node arrays may contain duplicated times at forced discontinuity
    points (left- and right-limit derivatives); ``mesh`` deduplicates.
    """

    model: Model
    initial: Segment
    ts: np.ndarray
    ys: np.ndarray
    fs: np.ndarray
    termination: Termination
    disc_times: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def t_end(self) -> float:
        return float(self.ts[-1])

    @property
    def mesh(self) -> np.ndarray:
        return np.unique(self.ts)

    def state_values(self, times, side: str = "right") -> np.ndarray:
        """x(t) for t in [-tau, t_end]; negative times read the initial data."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        out = np.empty((times.size, self.model.dim))
        neg = times < 0.0
        if np.any(neg):
            out[neg] = self.initial.eval(times[neg])
        if np.any(~neg):
            if len(self.ts) == 1:
                out[~neg] = self.ys[0]
            else:
                out[~neg] = hermite_eval(self.ts, self.ys, self.fs,
                                         times[~neg], side=side)
        return out

    def segment_at(self, t: float) -> Segment:
        return segment_at(self, t)


def propagated_discontinuities(initial: Segment, tau: float, k_smooth: int,
                               horizon: float) -> np.ndarray:
    """Forced mesh times theta_b + k*tau, k = 1..k_smooth, inside (0, horizon]."""
    bases = np.unique(np.concatenate([[0.0], initial.breakpoints]))
    times = []
    for b in bases:
        for k in range(1, k_smooth + 1):
            tt = b + k * tau
            if 1e-12 * tau < tt <= horizon:
                times.append(tt)
    if not times:
        return np.empty(0)
    times = np.sort(np.asarray(times))
    keep = np.concatenate([[True], np.diff(times) > 1e-12 * tau])
    return times[keep]


def integrate(model: Model, initial: Segment, horizon: float,
              opts: Optional[SolverOptions] = None) -> Trajectory:
    """Integrate the Cauchy problem forward over [0, horizon]."""
    if opts is None:
        opts = SolverOptions()
    if not (horizon > 0) or not math.isfinite(horizon):
        raise ValueError("horizon must be a positive finite number")
    if abs(initial.tau - model.tau) > 1e-9 * model.tau:
        raise ValueError("initial segment delay does not match the model")
    if initial.dim != model.dim:
        raise ValueError("initial segment dimension does not match the model")

    tau = model.tau
    hmax = opts.max_step if opts.max_step is not None else tau / 4.0
    hmax = min(hmax, tau)
    hmin = opts.min_step if opts.min_step is not None else 1e-12 * max(tau, 1.0)
    h0 = opts.first_step if opts.first_step is not None else min(hmax, tau / 50.0)
    h0 = max(h0, hmin)

    use_stop = opts.delta_num > 0 and opts.stop_space is not None
    if use_stop:
        seg0 = initial if not np.any(model.equilibrium) else initial.offset(-model.equilibrium)
        if norms.norm(opts.stop_space, seg0) < opts.delta_num:
            y0 = initial.eval(np.array([0.0]))[0]
            xd0 = initial.eval(np.array([-tau]))[0]
            f0 = model.f(y0, xd0)
            return Trajectory(model, initial, np.array([0.0]), y0[None, :],
                              f0[None, :], Termination.converged_at(0.0))
        mode, mask = norms.stop_mode_and_mask(opts.stop_space, model.dim)
    else:
        mode, mask = _kernel.STOP_NONE, np.ones(model.dim, dtype=np.bool_)

    disc = propagated_discontinuities(initial, tau, opts.k_smooth, horizon)
    hk, hv, hd = initial.table()
    args = (model.dim, tau, model.equilibrium, hk, hv, hd,
            float(horizon), opts.rtol, opts.atol, hmax, hmin, h0,
            disc, opts.r_div, mode, opts.delta_num, mask, opts.stop_samples)
    if model.kernel_kind:
        status, t_term, ts, ys, fs = _kernel.integrate_loop(
            model.kernel_kind, np.asarray(model.kernel_params, dtype=float),
            model.kernel_ti, model.kernel_tf, *args)
    else:
        status, t_term, ts, ys, fs = _integrate_py(model.f, *args)

    if status == _kernel.STATUS_UNDERFLOW:
        raise StepUnderflowError(t_term)
    if status == _kernel.STATUS_CONVERGED:
        term = Termination.converged_at(t_term)
    elif status == _kernel.STATUS_BLOWUP:
        term = Termination.blowup(t_term)
    else:
        term = Termination.horizon(t_term)
    return Trajectory(model, initial, ts, ys, fs, term, disc)


def _integrate_py(f, n, tau, xe, hk, hv, hd, horizon, rtol, atol, hmax, hmin, h0,
                  disc, r_div, stop_mode, stop_delta, mask_I, stop_samples):
    """Reference Python implementation of the kernel loop (same semantics).

    Used for models whose right-hand side is an arbitrary Python callable.
    """
    ts = [0.0]
    y0 = hermite_eval(hk, hv, hd, 0.0)[0]
    f0 = f(y0, hermite_eval(hk, hv, hd, -tau)[0])
    ys = [y0]
    fs = [np.asarray(f0, float)]

    def state(td, side="right"):
        if td < 0.0:
            return hermite_eval(hk, hv, hd, td, side=side)[0]
        if len(ts) == 1:
            return ys[0]
        return hermite_eval(np.asarray(ts), np.asarray(ys), np.asarray(fs),
                            td, side=side)[0]

    status = _kernel.STATUS_HORIZON
    t_term = horizon
    t = 0.0
    h_prop = h0
    idisc = 0
    t_last_check = -np.inf
    while t < horizon:
        t_target = horizon
        hit = False
        if idisc < len(disc) and disc[idisc] < horizon:
            t_target = disc[idisc]
        if h_prop < hmin:
            status = _kernel.STATUS_UNDERFLOW
            t_term = t
            break
        h = h_prop
        if t + h >= t_target - 1e-12 * max(1.0, abs(t_target)):
            h = t_target - t
            hit = True
        t_new = t_target if hit else t + h
        hit_disc = hit and idisc < len(disc) and t_target == disc[idisc]

        y = ys[-1]
        k1 = fs[-1]
        k2 = np.asarray(f(y + 0.5 * h * k1, state(t + 0.5 * h - tau)), float)
        k3 = np.asarray(f(y + 0.75 * h * k2, state(t + 0.75 * h - tau)), float)
        ynew = y + h * (2.0 * k1 + 3.0 * k2 + 4.0 * k3) / 9.0
        side = "left" if hit_disc else "right"
        k4 = np.asarray(f(ynew, state(t_new - tau, side=side)), float)

        if not np.all(np.isfinite(ynew)):
            h_prop = h * 0.2
            continue
        e = h * (-5.0 * k1 / 72.0 + k2 / 12.0 + k3 / 9.0 - k4 / 8.0)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
        err = float(np.sqrt(np.mean((e / sc) ** 2)))
        if err > 1.0:
            h_prop = h * min(0.9, max(0.2, 0.9 * err ** (-1.0 / 3.0)))
            continue

        ts.append(t_new)
        ys.append(ynew)
        fs.append(k4)
        if hit_disc:
            k4r = np.asarray(f(ynew, state(t_new - tau, side="right")), float)
            ts.append(t_new)
            ys.append(ynew)
            fs.append(k4r)
            idisc += 1
        t = t_new

        if np.linalg.norm(ynew) > r_div:
            status = _kernel.STATUS_BLOWUP
            t_term = t_new
            break
        if stop_mode != _kernel.STOP_NONE and t_new >= tau:
            if (np.sum((ynew - xe) ** 2) < stop_delta ** 2
                    and t_new >= t_last_check + 0.125 * tau):
                t_last_check = t_new
                th = np.linspace(t_new - tau, t_new, stop_samples + 1)
                X = np.vstack([state(td) for td in th]) - xe
                q = X * X
                q1 = q[:, mask_I].sum(axis=1)
                q2 = q[:, ~mask_I].sum(axis=1)
                if stop_mode == _kernel.STOP_C:
                    val = math.sqrt(np.max(q1 + q2))
                elif stop_mode == _kernel.STOP_Q:
                    val = math.sqrt(np.max(q1) + q2[-1])
                else:
                    val = math.sqrt(q1[-1] + q2[-1]) + math.sqrt(
                        np.trapezoid(q1 + q2, th))
                if val < 0.97 * stop_delta:
                    status = _kernel.STATUS_CONVERGED
                    t_term = t_new
                    break

        fac = 5.0 if err <= 1e-16 else min(5.0, max(0.2, 0.9 * err ** (-1.0 / 3.0)))
        cand = h * fac
        if hit:
            h_prop = max(h_prop, cand)
        else:
            h_prop = cand
        h_prop = min(h_prop, hmax)

    return (status, t_term, np.asarray(ts), np.asarray(ys), np.asarray(fs))


def segment_at(traj: Trajectory, t: float) -> Segment:
    """The state x_t as a Segment; splices initial data when t < tau."""
    tau = traj.model.tau
    if t < -1e-12 * max(1.0, tau) or t > traj.t_end + 1e-12 * max(1.0, traj.t_end):
        raise ValueError(f"t = {t:.6g} outside [0, {traj.t_end:.6g}]")
    t = min(max(t, 0.0), traj.t_end)
    if t == 0.0:
        return traj.initial
    lo = t - tau

    knots_parts = []
    vals_parts = []
    ders_parts = []

    if lo < 0.0:
        hk, hv, hd = traj.initial.table()
        i0 = int(np.searchsorted(hk, lo, side="right")) - 1
        if i0 >= 0 and hk[i0] == lo:
            start = i0
        else:
            v, d = hermite_eval(hk, hv, hd, lo, want_deriv=True)
            knots_parts.append(np.array([lo]))
            vals_parts.append(v)
            ders_parts.append(d)
            start = i0 + 1
        # keep all knots below 0 plus, for a jump at 0, its left-limit copy;
        # the right value at 0 comes from the trajectory's first node
        nz = int(np.searchsorted(hk, 0.0, side="left"))
        sel = slice(start, nz + (len(hk) - nz - 1))
        knots_parts.append(hk[sel])
        vals_parts.append(hv[sel])
        ders_parts.append(hd[sel])
        tstart = 0.0
        first_node = 0
    else:
        tstart = lo
        first_node = int(np.searchsorted(traj.ts, lo, side="right"))
        if first_node > 0 and traj.ts[first_node - 1] == lo:
            first_node -= 1
        else:
            v, d = hermite_eval(traj.ts, traj.ys, traj.fs, lo, want_deriv=True)
            knots_parts.append(np.array([lo]))
            vals_parts.append(v)
            ders_parts.append(d)

    last_node = int(np.searchsorted(traj.ts, t, side="right"))
    sel = slice(first_node, last_node)
    knots_parts.append(traj.ts[sel])
    vals_parts.append(traj.ys[sel])
    ders_parts.append(traj.fs[sel])
    if last_node == 0 or traj.ts[last_node - 1] != t:
        v, d = hermite_eval(traj.ts, traj.ys, traj.fs, t, want_deriv=True)
        knots_parts.append(np.array([t]))
        vals_parts.append(v)
        ders_parts.append(d)

    knots = np.concatenate(knots_parts) - t
    vals = np.vstack(vals_parts)
    ders = np.vstack(ders_parts)

    bp = [float(b - t) for b in traj.initial.breakpoints if lo <= b < 0.0]
    if 0.0 < t < tau:
        bp.append(-t)
    for d_ in traj.disc_times:
        if lo < d_ <= t:
            bp.append(float(d_ - t))
    bp = sorted(set(b for b in bp if -tau <= b <= 0.0))
    return Segment.from_table(knots, vals, ders, breakpoints=bp)
