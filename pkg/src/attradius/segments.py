"""Delay-width function segments: the states x_t of a delay system.

A :class:`Segment` is a vector function on the delay window ``[-tau, 0]``.
It can come from a closed-form family, a slice of a computed trajectory, or
a user table. Jump discontinuities are first-class: the stored value at a
breakpoint is the right-hand limit and the left-hand limit stays evaluable.

Internally every segment can be lowered to a piecewise cubic Hermite table
(knots, values, derivatives) with duplicated knots at breakpoints; this is
the representation the integration kernel consumes.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernel


def _as_theta_array(theta) -> np.ndarray:
    th = np.asarray(theta, dtype=float)
    return np.atleast_1d(th)


class Segment:
    """A dense-evaluable function ``[-tau, 0] -> R^n`` with breakpoints."""

    def __init__(self, tau: float, dim: int, breakpoints: Sequence[float] = (),
                 fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 fn_left: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 deriv: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 table: Optional[tuple] = None,
                 table_density: int = 512):
        if tau <= 0:
            raise ValueError("tau must be positive")
        self.tau = float(tau)
        self.dim = int(dim)
        bp = np.asarray(sorted(set(float(b) for b in breakpoints)), dtype=float)
        if bp.size and (bp[0] < -tau - 1e-12 * tau or bp[-1] > 1e-12 * tau):
            raise ValueError("breakpoints must lie in [-tau, 0]")
        self.breakpoints = bp
        self._fn = fn
        self._fn_left = fn_left if fn_left is not None else fn
        self._deriv = deriv
        self._table = table
        self._table_density = int(table_density)
        if fn is None and table is None:
            raise ValueError("segment needs a callable or a table")

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_callable(cls, fn, tau, dim, breakpoints=(), fn_left=None,
                      deriv=None, table_density=512) -> "Segment":
        return cls(tau, dim, breakpoints, fn=fn, fn_left=fn_left, deriv=deriv,
                   table_density=table_density)

    @classmethod
    def from_table(cls, knots, vals, ders, breakpoints=None) -> "Segment":
        knots = np.ascontiguousarray(knots, dtype=float)
        vals = np.ascontiguousarray(vals, dtype=float)
        ders = np.ascontiguousarray(ders, dtype=float)
        if knots.ndim != 1 or vals.shape != (knots.size, vals.shape[1]):
            raise ValueError("malformed table")
        if ders.shape != vals.shape:
            raise ValueError("values and derivatives must have equal shape")
        tau = -knots[0]
        if abs(knots[-1]) > 1e-12 * max(1.0, tau):
            raise ValueError("table must end at theta = 0")
        if breakpoints is None:
            dup = knots[1:][np.diff(knots) <= 0.0]
            jumpy = []
            for b in dup:
                i = np.searchsorted(knots, b, side="left")
                if not np.allclose(vals[i], vals[min(i + 1, len(knots) - 1)]):
                    jumpy.append(b)
            breakpoints = jumpy
        return cls(tau, vals.shape[1], breakpoints, table=(knots, vals, ders))

    @classmethod
    def constant(cls, value, tau) -> "Segment":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        n = value.size

        def fn(th):
            th = _as_theta_array(th)
            return np.broadcast_to(value, (th.size, n)).copy()

        def dfn(th):
            th = _as_theta_array(th)
            return np.zeros((th.size, n))

        return cls(tau, n, (), fn=fn, deriv=dfn)

    def __reduce__(self):
        # closures do not pickle; transport segments as their Hermite table
        knots, vals, ders = self.table()
        return (Segment.from_table, (knots, vals, ders, tuple(self.breakpoints)))

    # -- evaluation --------------------------------------------------------

    def eval(self, theta) -> np.ndarray:
        """Values at theta (right-continuous at breakpoints); shape (k, n)."""
        th = _as_theta_array(theta)
        if self._fn is not None:
            out = np.asarray(self._fn(th), dtype=float).reshape(th.size, self.dim)
            return out
        knots, vals, ders = self._table
        return _kernel.eval_table_many(knots, vals, ders, th, False)

    def eval_left(self, theta) -> np.ndarray:
        """Left-hand limits at theta; differs from eval only at breakpoints."""
        th = _as_theta_array(theta)
        if self._fn is not None:
            return np.asarray(self._fn_left(th), dtype=float).reshape(th.size, self.dim)
        knots, vals, ders = self._table
        return _kernel.eval_table_many(knots, vals, ders, th, True)

    def __call__(self, theta):
        return self.eval(theta)

    # -- table lowering ----------------------------------------------------

    def table(self):
        """(knots, values, derivatives) with duplicated knots at breakpoints."""
        if self._table is None:
            self._table = self._build_table()
        return self._table

    def _build_table(self):
        tau = self.tau
        edges = np.concatenate([[-tau], self.breakpoints, [0.0]])
        edges = np.unique(edges)
        knots_list = []
        vals_list = []
        ders_list = []
        for a, b in zip(edges[:-1], edges[1:]):
            npts = max(8, int(np.ceil(self._table_density * (b - a) / tau)) + 1)
            th = np.linspace(a, b, npts)
            v = self.eval(th)
            v[-1] = self.eval_left(np.array([b]))[0]
            if self._deriv is not None:
                d = np.asarray(self._deriv(th), dtype=float).reshape(npts, self.dim)
            else:
                d = np.gradient(v, th, axis=0)
            knots_list.append(th)
            vals_list.append(v)
            ders_list.append(d)
        knots = np.concatenate(knots_list)
        vals = np.vstack(vals_list)
        ders = np.vstack(ders_list)
        # re-impose the right-limit value at duplicated piece edges
        right_val = self.eval(np.array([0.0]))[0]
        vals[-1] = self.eval_left(np.array([0.0]))[0]
        if np.allclose(vals[-1], right_val):
            vals[-1] = right_val
        else:
            knots = np.append(knots, 0.0)
            vals = np.vstack([vals, right_val])
            ders = np.vstack([ders, ders[-1]])
        return (np.ascontiguousarray(knots), np.ascontiguousarray(vals),
                np.ascontiguousarray(ders))

    # -- algebra -----------------------------------------------------------

    def offset(self, delta) -> "Segment":
        """Segment theta -> phi(theta) + delta for a constant vector delta."""
        delta = np.atleast_1d(np.asarray(delta, dtype=float))
        if self._fn is not None:
            fn = self._fn
            fnl = self._fn_left
            der = self._deriv
            seg = Segment(self.tau, self.dim, self.breakpoints,
                          fn=lambda th: np.asarray(fn(th)) + delta,
                          fn_left=lambda th: np.asarray(fnl(th)) + delta,
                          deriv=der, table_density=self._table_density)
            return seg
        knots, vals, ders = self.table()
        return Segment.from_table(knots, vals + delta, ders,
                                  breakpoints=self.breakpoints)

    def scaled(self, alpha: float) -> "Segment":
        alpha = float(alpha)
        if self._fn is not None:
            fn = self._fn
            fnl = self._fn_left
            der = self._deriv
            dfn = None if der is None else (lambda th: alpha * np.asarray(der(th)))
            return Segment(self.tau, self.dim, self.breakpoints,
                           fn=lambda th: alpha * np.asarray(fn(th)),
                           fn_left=lambda th: alpha * np.asarray(fnl(th)),
                           deriv=dfn, table_density=self._table_density)
        knots, vals, ders = self.table()
        return Segment.from_table(knots, alpha * vals, alpha * ders,
                                  breakpoints=self.breakpoints)

    def plus(self, other: "Segment") -> "Segment":
        if abs(other.tau - self.tau) > 1e-12 * self.tau or other.dim != self.dim:
            raise ValueError("segments must share delay and dimension")
        bp = np.unique(np.concatenate([self.breakpoints, other.breakpoints]))
        a, b = self, other
        return Segment(self.tau, self.dim, bp,
                       fn=lambda th: a.eval(th) + b.eval(th),
                       fn_left=lambda th: a.eval_left(th) + b.eval_left(th),
                       table_density=max(self._table_density, other._table_density))

    def rescaled(self, tau_new: float) -> "Segment":
        """Delay reparametrization: phi_hat(s) = phi(s * tau / tau_new)."""
        if tau_new <= 0:
            raise ValueError("tau_new must be positive")
        ratio = self.tau / tau_new
        bp = self.breakpoints / ratio
        if self._fn is not None:
            fn = self._fn
            fnl = self._fn_left
            der = self._deriv
            dfn = None if der is None else (
                lambda th: ratio * np.asarray(der(np.asarray(th) * ratio)))
            return Segment(tau_new, self.dim, bp,
                           fn=lambda th: np.asarray(fn(np.asarray(th) * ratio)),
                           fn_left=lambda th: np.asarray(fnl(np.asarray(th) * ratio)),
                           deriv=dfn, table_density=self._table_density)
        knots, vals, ders = self.table()
        return Segment.from_table(knots / ratio, vals, ders * ratio,
                                  breakpoints=bp)

    def sample_table(self, points_per_delay: int = 128):
        """Plain sampled table (thetas, values) for serialization."""
        th = np.linspace(-self.tau, 0.0, points_per_delay + 1)
        return th, self.eval(th)
