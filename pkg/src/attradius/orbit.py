"""Periodic orbits of the delay system by piecewise-polynomial collocation,
continuation of the orbit branch in the delay, and cycle-based bounds.

The periodic solution z on the normalized period satisfies

    dz/dthat = T f(z(that), z((that - tau/T) mod 1)),   z(0) = z(1),

closed by the integral phase condition <zdot_ref, z> = 0. The delayed
argument wraps periodically, which is equivalent to the boundary-strip
formulation for periodic z and uniform in tau/T (including tau > T).

Any state segment of a cycle bounded away from the equilibrium yields an
upper bound on the radius of attraction, because the cycle is invariant and
therefore disjoint from the domain of attraction; the minimum segment norm
over one period is the reported bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg as sla

from . import norms
from .dde import Model
from .segments import Segment


class OrbitSolveError(RuntimeError):
    def __init__(self, msg: str, residual: float = math.nan,
                 fold_suspect: bool = False):
        super().__init__(msg)
        self.residual = residual
        self.fold_suspect = fold_suspect


def _gauss_points(m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points and weights mapped to (0, 1)."""
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


def _newton_step(J: np.ndarray, R: np.ndarray) -> Tuple[np.ndarray, bool]:
    """Solve J delta = -R; fall back to a truncated-SVD least-squares step
    when J is numerically singular (e.g. along symmetry directions of
    degenerate problems), which suppresses null-space noise."""
    try:
        lu, piv = sla.lu_factor(J)
        rcond = sla.lapack.dgecon(lu, np.linalg.norm(J, 1), norm="1")[0]
        if rcond > 1e-12:
            return sla.lu_solve((lu, piv), -R), False
    except (sla.LinAlgError, ValueError):
        pass
    delta, _, rank, _ = np.linalg.lstsq(J, -R, rcond=1e-10)
    return delta, rank < J.shape[0]


def _lagrange_vd(nodes: np.ndarray, s: float) -> Tuple[np.ndarray, np.ndarray]:
    """Values and derivatives of the Lagrange basis at local coordinate s."""
    M = nodes.size
    vals = np.empty(M)
    ders = np.empty(M)
    for j in range(M):
        den = 1.0
        val = 1.0
        for k in range(M):
            if k != j:
                den *= nodes[j] - nodes[k]
                val *= s - nodes[k]
        dval = 0.0
        for k in range(M):
            if k == j:
                continue
            tmp = 1.0
            for l in range(M):
                if l != j and l != k:
                    tmp *= s - nodes[l]
            dval += tmp
        vals[j] = val / den
        ders[j] = dval / den
    return vals, ders


@dataclass
class OrbitGuess:
    profile: Callable[[np.ndarray], np.ndarray]       # that in [0,1] -> (k, n)
    dprofile: Callable[[np.ndarray], np.ndarray]      # d/dthat
    period: float


@dataclass
class PeriodicOrbit:
    """Collocation representation of a periodic solution."""

    tau: float
    period: float
    L: int
    degree: int
    nodes: np.ndarray            # (L*degree + 1, n) nodal values on [0, 1]
    residual: float
    phase_ref: np.ndarray        # nodal values of the phase reference profile
    n_iterations: int = 0

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def delay_ratio(self) -> float:
        return self.tau / self.period

    @property
    def closure_gap(self) -> float:
        return float(np.linalg.norm(self.nodes[0] - self.nodes[-1]))

    def _locate(self, that: np.ndarray):
        s = np.mod(that, 1.0)
        k = np.minimum((s * self.L).astype(int), self.L - 1)
        sigma = s * self.L - k
        return k, sigma

    def eval(self, that, deriv: bool = False) -> np.ndarray:
        that = np.atleast_1d(np.asarray(that, dtype=float))
        m = self.degree
        local = np.linspace(0.0, 1.0, m + 1)
        k, sigma = self._locate(that)
        out = np.zeros((that.size, self.dim))
        for i in range(that.size):
            v, d = _lagrange_vd(local, float(sigma[i]))
            w = d * self.L if deriv else v
            out[i] = w @ self.nodes[k[i] * m: k[i] * m + m + 1]
        return out

    def state_segment(self, t_phase: float) -> Segment:
        """The delay-width state x_t of the cycle at phase t (original time)."""
        T = self.period

        def fn(th):
            return self.eval((t_phase + np.asarray(th, float)) / T)

        def dfn(th):
            return self.eval((t_phase + np.asarray(th, float)) / T, deriv=True) / T

        return Segment(self.tau, self.dim, (), fn=fn, deriv=dfn)

    def resampled(self, L: int, degree: int) -> "PeriodicOrbit":
        grid = _node_grid(L, degree)
        return PeriodicOrbit(self.tau, self.period, L, degree, self.eval(grid),
                             self.residual, self.eval(grid), self.n_iterations)


def _node_grid(L: int, m: int) -> np.ndarray:
    """Global node positions in [0, 1] (shared interval endpoints)."""
    g = np.empty(L * m + 1)
    for i in range(L):
        g[i * m: (i + 1) * m + 1] = i / L + np.linspace(0.0, 1.0, m + 1) / L
    return g


def solve_periodic(model: Model, tau: float, guess, L: int = 40, m: int = 4,
                   phase_ref: Optional[np.ndarray] = None, max_iter: int = 30,
                   tol_residual: float = 1e-9, tol_update: float = 1e-10) -> PeriodicOrbit:
    """Newton on the collocation system for one periodic orbit at delay tau."""
    n = model.dim
    grid = _node_grid(L, m)
    G = grid.size

    if isinstance(guess, PeriodicOrbit):
        Z = guess.eval(grid)
        T = guess.period
        ref = phase_ref if phase_ref is not None else guess.eval(grid)
    elif isinstance(guess, OrbitGuess):
        Z = guess.profile(grid)
        T = guess.period
        ref = phase_ref if phase_ref is not None else Z.copy()
    else:
        Z, T = guess
        Z = np.asarray(Z, dtype=float).reshape(G, n)
        ref = phase_ref if phase_ref is not None else Z.copy()

    local = np.linspace(0.0, 1.0, m + 1)
    cg, wg = _gauss_points(m)
    V = np.empty((m, m + 1))
    Dm = np.empty((m, m + 1))
    for q in range(m):
        V[q], Dm[q] = _lagrange_vd(local, float(cg[q]))

    # phase reference derivative at the collocation points, fixed over Newton
    refdot = np.empty((L, m, n))
    for i in range(L):
        blk = ref[i * m: i * m + m + 1]
        for q in range(m):
            refdot[i, q] = (Dm[q] @ blk) * L

    n_unknowns = G * n + 1
    it = 0
    res_norm = math.inf
    upd_norm = math.inf
    converged = False
    saw_rank_deficiency = False
    for it in range(1, max_iter + 1):
        if not (T > 0) or not math.isfinite(T):
            raise OrbitSolveError("period left the feasible range", res_norm)
        R = np.zeros(n_unknowns)
        J = np.zeros((n_unknowns, n_unknowns))
        ratio = tau / T
        row = 0
        for i in range(L):
            blk = slice(i * m, i * m + m + 1)
            Zblk = Z[blk]
            for q in range(m):
                c = (i + cg[q]) / L
                zc = V[q] @ Zblk
                dzc = (Dm[q] @ Zblk) * L
                s = (c - ratio) % 1.0
                k = min(int(s * L), L - 1)
                sigma = s * L - k
                vd, dd = _lagrange_vd(local, sigma)
                kblk = slice(k * m, k * m + m + 1)
                zs = vd @ Z[kblk]
                dzs = (dd @ Z[kblk]) * L
                fval = model.f(zc, zs)
                fx, fxd = model.jac(zc, zs)
                rr = slice(row, row + n)
                R[rr] = dzc - T * fval
                for j in range(m + 1):
                    col = (i * m + j) * n
                    J[rr, col:col + n] += Dm[q, j] * L * np.eye(n) - T * V[q, j] * fx
                for j in range(m + 1):
                    col = (k * m + j) * n
                    J[rr, col:col + n] += -T * vd[j] * fxd
                J[rr, -1] = -fval - (tau / T) * (fxd @ dzs)
                row += n
        # periodicity z(0) = z(1)
        rr = slice(row, row + n)
        R[rr] = Z[0] - Z[-1]
        J[rr, 0:n] = np.eye(n)
        J[rr, (G - 1) * n: G * n] = -np.eye(n)
        row += n
        # integral phase condition <zdot_ref, z> = 0
        pr = row
        acc = 0.0
        for i in range(L):
            blk = slice(i * m, i * m + m + 1)
            Zblk = Z[blk]
            for q in range(m):
                zc = V[q] @ Zblk
                wq = wg[q] / L
                acc += wq * float(refdot[i, q] @ zc)
                for j in range(m + 1):
                    col = (i * m + j) * n
                    J[pr, col:col + n] += wq * V[q, j] * refdot[i, q]
        R[pr] = acc

        res_norm = float(np.max(np.abs(R)))
        # convergence is checked before stepping: at a (numerically) exact
        # solution the Jacobian may be singular along symmetry directions and
        # a further "update" would only inject null-space noise
        if res_norm < tol_residual and \
                (upd_norm < tol_update or res_norm < 1e-3 * tol_residual):
            converged = True
            break
        delta, rank_deficient = _newton_step(J, R)
        if rank_deficient:
            saw_rank_deficiency = True
        upd_norm = float(np.max(np.abs(delta)))
        if not math.isfinite(upd_norm) or upd_norm > 1e6 * (1.0 + float(np.max(np.abs(Z)))):
            raise OrbitSolveError("diverging Newton update", res_norm,
                                  fold_suspect=True)
        Z = Z + delta[:-1].reshape(G, n)
        T = T + float(delta[-1])
    if not converged:
        raise OrbitSolveError(
            f"Newton did not converge in {max_iter} iterations", res_norm,
            fold_suspect=saw_rank_deficiency)

    orb = PeriodicOrbit(tau, T, L, m, Z, res_norm, ref, it)
    return orb


def amplitude(orb: PeriodicOrbit) -> float:
    center = orb.nodes.mean(axis=0)
    return float(np.max(np.linalg.norm(orb.nodes - center, axis=1)))


# -- Hopf seeding --------------------------------------------------------------


def hopf_seed(model: Model, hopf: Tuple[float, float],
              eigvec: Optional[np.ndarray] = None,
              amplitude: Optional[float] = None) -> OrbitGuess:
    """Normal-form ansatz x_e + eps (Re v cos 2 pi that - Im v sin 2 pi that)."""
    w, tau_h = hopf
    xe = model.equilibrium
    eps = amplitude if amplitude is not None else 1e-2 * (1.0 + float(np.linalg.norm(xe)))
    if eigvec is None:
        A0, A1 = model.linearization()
        Delta = 1j * w * np.eye(model.dim) - A0 - A1 * np.exp(-1j * w * tau_h)
        U, S, Vh = np.linalg.svd(Delta)
        if model.dim > 1 and S[-2] < 1e-6 * max(S[0], 1.0):
            raise OrbitSolveError("critical eigenvalue pair is not simple")
        eigvec = Vh.conj()[-1]
    v = np.asarray(eigvec, dtype=complex)
    v = v / np.linalg.norm(v)
    re, im = v.real.copy(), v.imag.copy()

    def profile(that):
        that = np.atleast_1d(np.asarray(that, float))
        ang = 2.0 * math.pi * that
        return xe + eps * (np.outer(np.cos(ang), re) - np.outer(np.sin(ang), im))

    def dprofile(that):
        that = np.atleast_1d(np.asarray(that, float))
        ang = 2.0 * math.pi * that
        return -2.0 * math.pi * eps * (np.outer(np.sin(ang), re) + np.outer(np.cos(ang), im))

    return OrbitGuess(profile, dprofile, 2.0 * math.pi / w)


def orbit_from_hopf(model: Model, hopf: Tuple[float, float], dtau: float = 0.1,
                    eps_ladder: Sequence[float] = (0.01, 0.05, 0.15, 0.4),
                    L: int = 40, m: int = 4) -> PeriodicOrbit:
    """First orbit near a regain-of-stability point, at tau_H + dtau.

    Newton from a too-small seed can collapse to the trivial (equilibrium)
    branch, so increasing seed amplitudes are tried until a non-trivial
    orbit converges.
    """
    w, tau_h = hopf
    xe_scale = 1.0 + float(np.linalg.norm(model.equilibrium))
    last_err: Optional[Exception] = None
    for eps in eps_ladder:
        try:
            guess = hopf_seed(model, hopf, amplitude=eps * xe_scale)
            orb = solve_periodic(model, tau_h + dtau, guess, L=L, m=m)
        except OrbitSolveError as exc:
            last_err = exc
            continue
        if amplitude(orb) > 1e-6 * xe_scale:
            return orb
        last_err = OrbitSolveError("collapsed to the trivial solution")
    raise OrbitSolveError(
        f"no nontrivial orbit found near the Hopf candidate at tau = {tau_h:.6g}"
    ) from last_err


# -- continuation ---------------------------------------------------------------


@dataclass(frozen=True)
class StepPolicy:
    dtau: float = 0.1
    dtau_min: float = 1e-4
    dtau_max: float = 0.5
    grow: float = 1.5
    profile_jump_max: float = 1.0


@dataclass
class Branch:
    points: List[Tuple[float, PeriodicOrbit]] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)
    fold_suspect: bool = False
    complete: bool = False

    @property
    def taus(self) -> np.ndarray:
        return np.array([t for t, _ in self.points])

    def orbit_at(self, tau: float) -> PeriodicOrbit:
        i = int(np.argmin(np.abs(self.taus - tau)))
        return self.points[i][1]


def continue_branch(model: Model, seed: PeriodicOrbit, tau_target: float,
                    policy: StepPolicy = StepPolicy()) -> Branch:
    """Natural-parameter continuation in the delay with a secant predictor."""
    br = Branch(points=[(seed.tau, seed)])
    tau = seed.tau
    if tau_target == tau:
        br.complete = True
        return br
    sign = 1.0 if tau_target > tau else -1.0
    dtau = min(policy.dtau, abs(tau_target - tau))
    prev: Optional[PeriodicOrbit] = None
    cur = seed
    successes = 0
    while sign * (tau_target - tau) > 1e-12:
        step = sign * min(dtau, abs(tau_target - tau))
        tau_next = tau + step
        if prev is not None and abs(cur.tau - prev.tau) > 0:
            fac = (tau_next - cur.tau) / (cur.tau - prev.tau)
            Zpred = cur.nodes + fac * (cur.nodes - prev.nodes)
            Tpred = cur.period + fac * (cur.period - prev.period)
        else:
            Zpred = cur.nodes.copy()
            Tpred = cur.period
        try:
            nxt = solve_periodic(model, tau_next, (Zpred, Tpred),
                                 L=cur.L, m=cur.degree,
                                 phase_ref=cur.nodes.copy())
            jump = float(np.max(np.abs(nxt.nodes - cur.nodes)))
            if jump > policy.profile_jump_max:
                raise OrbitSolveError(f"profile jump {jump:.3g} exceeds bound")
        except OrbitSolveError as exc:
            br.failures.append(f"tau={tau_next:.6g}: {exc}")
            if getattr(exc, "fold_suspect", False):
                br.fold_suspect = True
            dtau *= 0.5
            successes = 0
            if dtau < policy.dtau_min:
                return br
            continue
        nxt.tau = tau_next
        br.points.append((tau_next, nxt))
        prev, cur = cur, nxt
        tau = tau_next
        successes += 1
        if successes >= 2:
            dtau = min(dtau * policy.grow, policy.dtau_max)
    br.complete = True
    return br


# -- cycle-based bound -----------------------------------------------------------


def min_norm_on_cycle(orb: PeriodicOrbit, space: norms.NormSpace,
                      equilibrium: Optional[np.ndarray] = None,
                      n_phase: int = 128) -> Tuple[float, float]:
    """(min over the phase of ||x_t^cycle||, minimizing phase)."""
    eq = np.zeros(orb.dim) if equilibrium is None else np.asarray(equilibrium, float)

    def value(t_phase: float) -> float:
        seg = orb.state_segment(t_phase)
        if np.any(eq):
            seg = seg.offset(-eq)
        return norms.norm(space, seg)

    dist = np.linalg.norm(orb.nodes - eq, axis=1)
    if float(dist.min()) < 1e-9 * max(1.0, float(dist.max())):
        raise OrbitSolveError("cycle passes through the equilibrium; "
                              "invariant-set bound inapplicable")

    T = orb.period
    phases = np.linspace(0.0, T, n_phase, endpoint=False)
    vals = np.array([value(t) for t in phases])
    i = int(np.argmin(vals))
    # parabolic refinement with periodic neighbors
    tm = phases[(i - 1) % n_phase] if i > 0 else phases[-1] - T
    tp = phases[(i + 1) % n_phase] if i < n_phase - 1 else phases[0] + T
    x = np.array([tm, phases[i], tp])
    y = np.array([vals[(i - 1) % n_phase], vals[i], vals[(i + 1) % n_phase]])
    denom = (x[0] - x[1]) * (y[1] - y[2]) - (x[1] - x[2]) * (y[0] - y[1])
    t_star = phases[i]
    if denom != 0.0:
        num = (x[0] - x[1]) ** 2 * (y[1] - y[2]) - (x[1] - x[2]) ** 2 * (y[0] - y[1])
        t_star = float(np.clip(x[1] - 0.5 * num / denom, x[0], x[2])) % T
    best = min(float(vals[i]), value(t_star))
    return best, t_star
