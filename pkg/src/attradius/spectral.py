"""Linearized stability: rightmost characteristic roots, imaginary-axis
crossings, and stability windows in the delay.

Roots come from a Chebyshev pseudospectral discretization of the generator
of the solution semigroup (one dense eigenproblem), Newton-refined on the
characteristic function. Crossing frequencies solve |P(i w)| = |Q(i w)| for
quasi-polynomials h(lam, tau) = P(lam) + Q(lam) exp(-lam tau); each
frequency yields the delay ladder tau_k = (psi + 2 pi k) / w.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import linalg as sla
from scipy.optimize import brentq


@dataclass
class Root:
    lam: complex
    residual: float
    refined: bool


@dataclass
class CharacteristicProblem:
    """Linear(ized) problem x' = A0 x + A1 x(t - tau) and its scalar reduction."""

    A0: np.ndarray
    A1: np.ndarray
    tau: float
    P: Optional[np.ndarray] = None      # poly coefficients, low -> high
    Q: Optional[np.ndarray] = None
    char_fn: Optional[Callable] = None  # (lam, tau) -> complex

    def __post_init__(self):
        self.A0 = np.atleast_2d(np.asarray(self.A0, dtype=float))
        self.A1 = np.atleast_2d(np.asarray(self.A1, dtype=float))
        if self.A0.shape != self.A1.shape or self.A0.shape[0] != self.A0.shape[1]:
            raise ValueError("matrices must be square and of equal shape")
        if self.tau <= 0:
            raise ValueError("delay must be positive")
        if self.P is not None:
            self.P = np.asarray(self.P, dtype=float)
            self.Q = np.asarray(self.Q, dtype=float)
            self._check_reduction()

    @property
    def n(self) -> int:
        return self.A0.shape[0]

    @classmethod
    def from_model(cls, model, tau: Optional[float] = None) -> "CharacteristicProblem":
        A0, A1 = model.linearization()
        P = Q = None
        if model.char_poly is not None:
            P, Q = model.char_poly
        return cls(A0, A1, tau if tau is not None else model.tau, P=P, Q=Q,
                   char_fn=model.char_fn)

    def _check_reduction(self, samples: int = 10):
        rng = np.random.default_rng(7)
        for _ in range(samples):
            lam = complex(rng.normal(), rng.normal())
            hv = self.h(lam)
            dv = self.det(lam)
            if abs(hv - dv) > 1e-8 * max(1.0, abs(dv)):
                raise ValueError("scalar reduction disagrees with the determinant")

    def det(self, lam: complex, tau: Optional[float] = None) -> complex:
        tau = self.tau if tau is None else tau
        M = lam * np.eye(self.n) - self.A0 - self.A1 * cmath.exp(-lam * tau)
        return complex(np.linalg.det(M))

    def h(self, lam: complex, tau: Optional[float] = None) -> complex:
        tau = self.tau if tau is None else tau
        if self.P is not None:
            return (np.polyval(self.P[::-1], lam)
                    + np.polyval(self.Q[::-1], lam) * cmath.exp(-lam * tau))
        if self.char_fn is not None:
            return complex(self.char_fn(lam, tau))
        return self.det(lam, tau)

    def h_prime(self, lam: complex, tau: Optional[float] = None) -> complex:
        tau = self.tau if tau is None else tau
        if self.P is not None:
            dP = np.polynomial.polynomial.polyder(self.P)
            dQ = np.polynomial.polynomial.polyder(self.Q)
            e = cmath.exp(-lam * tau)
            return (np.polyval(dP[::-1], lam)
                    + (np.polyval(dQ[::-1], lam)
                       - tau * np.polyval(self.Q[::-1], lam)) * e)
        d = 1e-7 * (1.0 + abs(lam))
        return (self.h(lam + d, tau) - self.h(lam - d, tau)) / (2 * d)

    @property
    def degree(self) -> int:
        return len(self.P) - 1 if self.P is not None else self.n

    def scaled_residual(self, lam: complex, tau: Optional[float] = None) -> float:
        return abs(self.h(lam, tau)) / max(1.0, abs(lam)) ** self.degree


def chebyshev_nodes_diff(N: int) -> Tuple[np.ndarray, np.ndarray]:
    """Chebyshev extreme points on [-1, 1] and the differentiation matrix."""
    if N == 0:
        return np.array([1.0]), np.zeros((1, 1))
    j = np.arange(N + 1)
    x = np.cos(np.pi * j / N)
    c = np.hstack([2.0, np.ones(N - 1), 2.0]) * (-1.0) ** j
    X = np.tile(x, (N + 1, 1)).T
    dX = X - X.T
    D = np.outer(c, 1.0 / c) / (dX + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return x, D


def _generator_matrix(prob: CharacteristicProblem, N: int) -> np.ndarray:
    n = prob.n
    _, D = chebyshev_nodes_diff(N)
    Dth = (2.0 / prob.tau) * D  # theta = (x - 1) * tau / 2, theta_0 = 0
    M = np.kron(Dth, np.eye(n))
    M[:n, :] = 0.0
    M[:n, :n] = prob.A0
    M[:n, -n:] = prob.A1
    return M


def _newton_refine(prob: CharacteristicProblem, lam: complex,
                   max_iter: int = 60) -> Tuple[complex, bool]:
    for _ in range(max_iter):
        hv = prob.h(lam)
        dv = prob.h_prime(lam)
        if dv == 0:
            return lam, False
        step = hv / dv
        lam = lam - step
        if abs(step) < 1e-13 * (1.0 + abs(lam)):
            return lam, True
    return lam, prob.scaled_residual(lam) < 1e-10


def rightmost_roots_detailed(prob: CharacteristicProblem, N: int = 32,
                             m: int = 10) -> List[Root]:
    """The m rightmost characteristic roots with residual diagnostics."""
    if N < 10:
        raise ValueError("discretization size must be at least 10")
    M = _generator_matrix(prob, N)
    eigs = sla.eigvals(M)
    order = np.argsort(-eigs.real)
    candidates = eigs[order][: max(3 * m, m + 10)]

    roots: List[Root] = []

    def push(lam: complex, refined: bool):
        res = prob.scaled_residual(lam)
        if res > 1e-8:
            return
        for r in roots:
            if abs(r.lam - lam) < 1e-7 * (1.0 + abs(lam)):
                return
        roots.append(Root(lam, res, refined))

    for lam0 in candidates:
        lam, converged = _newton_refine(prob, complex(lam0))
        push(lam, converged)
        if abs(lam.imag) > 1e-9:
            push(lam.conjugate(), converged)

    roots.sort(key=lambda r: (-r.lam.real, abs(r.lam.imag), -r.lam.imag))
    # never cut between the members of a conjugate pair
    cut = min(m, len(roots))
    if cut < len(roots) and abs(roots[cut - 1].lam.imag) > 1e-9 and \
            abs(roots[cut].lam - roots[cut - 1].lam.conjugate()) \
            < 1e-7 * (1.0 + abs(roots[cut].lam)):
        cut += 1
    return roots[:cut]


def rightmost_roots(prob: CharacteristicProblem, N: int = 32, m: int = 10) -> np.ndarray:
    return np.array([r.lam for r in rightmost_roots_detailed(prob, N, m)])


def spectral_abscissa(prob: CharacteristicProblem, N: int = 32) -> float:
    roots = rightmost_roots(prob, N, m=6)
    if roots.size == 0:
        raise RuntimeError("no characteristic roots passed the residual filter")
    return float(roots.real.max())


# -- imaginary-axis crossings -------------------------------------------------


@dataclass
class CrossingBranch:
    omega: float
    taus: np.ndarray        # ascending delays tau_k on this branch
    directions: np.ndarray  # sign of d(Re lam)/d tau at each tau_k


@dataclass
class CrossingSet:
    branches: List[CrossingBranch]

    def all_crossings(self, tau_max: Optional[float] = None):
        """Flat ascending list of (tau, omega, direction)."""
        out = []
        for br in self.branches:
            for tk, dk in zip(br.taus, br.directions):
                if tau_max is None or tk <= tau_max:
                    out.append((float(tk), br.omega, int(dk)))
        return sorted(out)


def _modulus_gap(prob: CharacteristicProblem, w: float) -> float:
    iw = 1j * w
    p = np.polyval(prob.P[::-1], iw)
    q = np.polyval(prob.Q[::-1], iw)
    return (p * p.conjugate()).real - (q * q.conjugate()).real


def crossing_direction(prob: CharacteristicProblem, w: float, tau: float) -> int:
    """Sign of d(Re lam)/d tau at lam = i w via implicit differentiation."""
    lam = 1j * w
    e = cmath.exp(-lam * tau)
    dP = np.polynomial.polynomial.polyder(prob.P)
    dQ = np.polynomial.polynomial.polyder(prob.Q)
    q = np.polyval(prob.Q[::-1], lam)
    denom = np.polyval(dP[::-1], lam) + (np.polyval(dQ[::-1], lam) - tau * q) * e
    if denom == 0:
        return 0
    dlam = lam * q * e / denom
    return int(np.sign(dlam.real)) if dlam.real != 0 else 0


def crossings(prob: CharacteristicProblem, omega_range: Optional[Tuple[float, float]] = None,
              branches: int = 8, grid_per_decade: int = 2000) -> CrossingSet:
    """Frequencies with |P(i w)| = |Q(i w)| and their delay ladders."""
    if prob.P is None:
        raise ValueError("crossings need the scalar quasi-polynomial reduction")
    if omega_range is None:
        bound = max(1.0, np.linalg.norm(prob.A0, 2) + np.linalg.norm(prob.A1, 2))
        omega_range = (1e-4 * 10.0 * bound, 10.0 * bound)
    w_lo, w_hi = omega_range
    decades = math.log10(w_hi / w_lo)
    ws = np.logspace(math.log10(w_lo), math.log10(w_hi),
                     max(64, int(grid_per_decade * decades)))
    gs = np.array([_modulus_gap(prob, w) for w in ws])

    roots_w = []
    for i in range(len(ws) - 1):
        if gs[i] == 0.0:
            roots_w.append(ws[i])
        elif gs[i] * gs[i + 1] < 0.0:
            roots_w.append(brentq(lambda w: _modulus_gap(prob, w), ws[i], ws[i + 1],
                                  xtol=1e-14, rtol=8.9e-16))
    out = []
    for w in roots_w:
        iw = 1j * w
        p = np.polyval(prob.P[::-1], iw)
        q = np.polyval(prob.Q[::-1], iw)
        if abs(q) < 1e-14 * max(1.0, abs(p)):
            continue
        c = -p / q  # = e^{-i w tau} on a crossing
        psi = math.atan2(-c.imag, c.real) % (2.0 * math.pi)
        taus = []
        dirs = []
        for k in range(branches):
            tk = (psi + 2.0 * math.pi * k) / w
            if tk <= 1e-12:
                continue
            taus.append(tk)
            dirs.append(crossing_direction(prob, w, tk))
        br = CrossingBranch(float(w), np.asarray(taus), np.asarray(dirs, dtype=int))
        for tk in br.taus:
            if prob.scaled_residual(1j * w, tk) > 1e-8:
                raise RuntimeError("crossing failed the residual check")
        out.append(br)
    return CrossingSet(out)


# -- stability windows ---------------------------------------------------------


@dataclass
class Window:
    lo: float
    hi: float
    abscissa_mid: float
    hopf_left: Optional[Tuple[float, float]]  # (omega, tau) of a regain endpoint
    consistent: bool


def stability_windows(prob: CharacteristicProblem, tau_max: float,
                      N: int = 32, cset: Optional[CrossingSet] = None) -> List[Window]:
    """Maximal delay intervals with negative spectral abscissa up to tau_max.

    Each interval is validated by one rightmost-roots evaluation at its
    midpoint; a stable interval whose left endpoint is a leftward (rightward
    to leftward) crossing is flagged as a Hopf candidate. ``consistent``
    records agreement between the crossing bookkeeping and the validation.
    """
    if cset is None:
        needed = int(math.ceil(tau_max * 2.0)) + 2
        cset = crossings(prob, branches=max(8, needed))
    events = cset.all_crossings(tau_max)
    edges = [0.0] + [e[0] for e in events] + [tau_max]

    # expected number of right-half-plane roots, starting delay-free
    rhp = int(np.sum(np.linalg.eigvals(prob.A0 + prob.A1).real > 0))
    windows = []
    counts = []
    for i in range(len(edges) - 1):
        counts.append(rhp)
        if i < len(events):
            rhp += 2 * events[i][2]  # a conjugate pair crosses
    for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        if hi - lo <= 1e-12:
            continue
        mid = 0.5 * (lo + hi)
        absc = spectral_abscissa(replace(prob, tau=mid), N=N)
        stable = absc < 0.0
        expected_stable = counts[i] == 0
        if not stable:
            continue
        hopf = None
        if i > 0:
            t_ev, w_ev, d_ev = events[i - 1]
            if d_ev < 0:
                hopf = (w_ev, t_ev)
        windows.append(Window(lo, hi, absc, hopf, stable == expected_stable))
    return windows
