"""JIT-compiled numerical core: right-hand-side dispatch, piecewise cubic
Hermite evaluation, and the adaptive Bogacki-Shampine 3(2) integration loop.

Everything here is an internal detail of :mod:`attradius.dde`. The public
contracts (types, options, error behaviour) live there.
"""

import math

import numpy as np
from numba import njit

# rhs dispatch codes
RHS_LINEAR = 1       # par = [A0.ravel(), A1.ravel()], row-major
RHS_SCALAR_CUBIC = 2  # par unused
RHS_SWING = 3        # par = [a, a_tilde, w, y_e]
RHS_TERMS = 4        # packed polynomial/trigonometric term table (ti, tf)

# termination status codes
STATUS_HORIZON = 0
STATUS_CONVERGED = 1
STATUS_BLOWUP = 2
STATUS_UNDERFLOW = 3

# stop-norm modes
STOP_NONE = 0
STOP_C = 1
STOP_Q = 2
STOP_M2 = 3

# factor kinds in the packed term table
FAC_POW = 0
FAC_SIN = 1
FAC_COS = 2

_EMPTY_I = np.empty(0, dtype=np.int64)
_EMPTY_F = np.empty(0, dtype=np.float64)


@njit(cache=True)
def rhs_eval(kind, par, ti, tf, x, xd, out):
    """Evaluate f(x, x_delayed) into ``out`` for a dispatch-coded model."""
    n = x.shape[0]
    if kind == RHS_LINEAR:
        for i in range(n):
            s = 0.0
            for j in range(n):
                s += par[i * n + j] * x[j]
                s += par[n * n + i * n + j] * xd[j]
            out[i] = s
    elif kind == RHS_SCALAR_CUBIC:
        out[0] = -x[0] - xd[0] + x[0] ** 3
    elif kind == RHS_SWING:
        a = par[0]
        at = par[1]
        w = par[2]
        ye = par[3]
        out[0] = x[1]
        out[1] = -a * x[1] - at * xd[1] + w - math.sin(x[0] + ye)
    else:
        # packed term table:
        # ti walks [row, n_factors, (fac_kind, var, idx) * n_factors] per term,
        # tf walks [coef, (a, b per trig factor)] per term. var: 0 = x, 1 = xd.
        for i in range(n):
            out[i] = 0.0
        nterms = ti[0]
        ci = 1
        cf = 0
        for _ in range(nterms):
            row = ti[ci]
            nfac = ti[ci + 1]
            ci += 2
            val = tf[cf]
            cf += 1
            for _ in range(nfac):
                fk = ti[ci]
                var = ti[ci + 1]
                idx = ti[ci + 2]
                ci += 3
                v = x[idx] if var == 0 else xd[idx]
                if fk == FAC_POW:
                    p = int(tf[cf])
                    cf += 1
                    for _ in range(p):
                        val *= v
                elif fk == FAC_SIN:
                    val *= math.sin(tf[cf] * v + tf[cf + 1])
                    cf += 2
                else:
                    val *= math.cos(tf[cf] * v + tf[cf + 1])
                    cf += 2
            out[row] += val
    return 0


@njit(cache=True, inline="always")
def _hermite(t0, y0, f0, t1, y1, f1, t, out):
    h = t1 - t0
    s = (t - t0) / h
    s2 = s * s
    s3 = s2 * s
    a0 = 2.0 * s3 - 3.0 * s2 + 1.0
    a1 = s3 - 2.0 * s2 + s
    b0 = -2.0 * s3 + 3.0 * s2
    b1 = s3 - s2
    for i in range(y0.shape[0]):
        out[i] = a0 * y0[i] + h * a1 * f0[i] + b0 * y1[i] + h * b1 * f1[i]


@njit(cache=True)
def eval_table(knots, vals, ders, theta, left, out):
    """Evaluate a piecewise cubic Hermite table at ``theta``.

    Duplicated knots encode jump discontinuities; ``left`` selects the
    one-sided limit when ``theta`` hits a knot exactly.
    """
    nk = knots.shape[0]
    if left:
        pos = np.searchsorted(knots, theta, side="left")
    else:
        pos = np.searchsorted(knots, theta, side="right")
    idx = pos - 1
    if idx < 0:
        idx = 0
    if idx > nk - 2:
        idx = nk - 2
    t0 = knots[idx]
    t1 = knots[idx + 1]
    if t1 - t0 <= 0.0:
        src = idx if left else idx + 1
        for i in range(out.shape[0]):
            out[i] = vals[src, i]
        return
    _hermite(t0, vals[idx], ders[idx], t1, vals[idx + 1], ders[idx + 1], theta, out)


@njit(cache=True)
def eval_table_many(knots, vals, ders, thetas, left):
    out = np.empty((thetas.shape[0], vals.shape[1]))
    for k in range(thetas.shape[0]):
        eval_table(knots, vals, ders, thetas[k], left, out[k])
    return out


@njit(cache=True)
def _eval_state(t_d, tau, hknots, hvals, hders, ts, ys, fs, m, left, out):
    """x(t_d): from the history table for t_d < 0, else from the mesh so far."""
    if t_d < 0.0:
        eval_table(hknots[: hknots.shape[0]], hvals, hders, t_d, left, out)
        return
    if left:
        pos = np.searchsorted(ts[:m], t_d, side="left")
    else:
        pos = np.searchsorted(ts[:m], t_d, side="right")
    idx = pos - 1
    if idx < 0:
        idx = 0
    if idx > m - 2:
        idx = m - 2
    if m == 1:
        for i in range(out.shape[0]):
            out[i] = ys[0, i]
        return
    t0 = ts[idx]
    t1 = ts[idx + 1]
    if t1 - t0 <= 0.0:
        src = idx if left else idx + 1
        for i in range(out.shape[0]):
            out[i] = ys[src, i]
        return
    _hermite(t0, ys[idx], fs[idx], t1, ys[idx + 1], fs[idx + 1], t_d, out)


@njit(cache=True)
def _window_stop_value(t, tau, xe, hknots, hvals, hders, ts, ys, fs, m,
                       stop_mode, mask_I, nsamp, buf):
    """Approximate the stop norm of the state segment ending at t >= tau."""
    n = buf.shape[0]
    max_full = 0.0
    max_I = 0.0
    integ = 0.0
    dt = tau / nsamp
    prev_q = 0.0
    q_end = 0.0
    qII_end = 0.0
    for k in range(nsamp + 1):
        th = t - tau + dt * k
        _eval_state(th, tau, hknots, hvals, hders, ts, ys, fs, m, False, buf)
        qI = 0.0
        qII = 0.0
        for i in range(n):
            d = buf[i] - xe[i]
            if mask_I[i]:
                qI += d * d
            else:
                qII += d * d
        q = qI + qII
        if q > max_full:
            max_full = q
        if qI > max_I:
            max_I = qI
        if k > 0:
            integ += 0.5 * (prev_q + q) * dt
        prev_q = q
        if k == nsamp:
            q_end = q
            qII_end = qII
    if stop_mode == STOP_C:
        return math.sqrt(max_full)
    if stop_mode == STOP_Q:
        return math.sqrt(max_I + qII_end)
    return math.sqrt(q_end) + math.sqrt(integ)


@njit(cache=True)
def integrate_loop(kind, par, ti, tf, n, tau, xe,
                   hknots, hvals, hders,
                   horizon, rtol, atol, hmax, hmin, h0,
                   disc, r_div,
                   stop_mode, stop_delta, mask_I, stop_samples):
    """Adaptive embedded 3(2) pair with cubic Hermite continuous extension.

    The mesh is forced onto every entry of ``disc`` (propagated discontinuity
    times). A node landed on exactly is stored twice, first with the
    left-limit derivative and then with the right-limit one, so dense output
    is one-sided correct on both sides.

    Returns (status, t_term, ts, ys, fs).
    """
    cap = 1024
    ts = np.empty(cap)
    ys = np.empty((cap, n))
    fs = np.empty((cap, n))

    y0 = np.empty(n)
    eval_table(hknots, hvals, hders, 0.0, False, y0)
    xd = np.empty(n)
    eval_table(hknots, hvals, hders, -tau, False, xd)
    f0 = np.empty(n)
    rhs_eval(kind, par, ti, tf, y0, xd, f0)
    ts[0] = 0.0
    ys[0] = y0
    fs[0] = f0
    m = 1

    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    ynew = np.empty(n)
    ystage = np.empty(n)
    buf = np.empty(n)

    status = STATUS_HORIZON
    t_term = horizon
    t = 0.0
    h_prop = h0
    idisc = 0
    nd = disc.shape[0]
    while idisc < nd and disc[idisc] <= 1e-14 * tau:
        idisc += 1
    t_last_stop_check = -1e300

    while t < horizon:
        t_target = horizon
        hit = False
        if idisc < nd and disc[idisc] < horizon:
            t_target = disc[idisc]
        if h_prop < hmin:
            status = STATUS_UNDERFLOW
            t_term = t
            break
        h_eff = h_prop
        if t + h_eff >= t_target - 1e-12 * max(1.0, abs(t_target)):
            h_eff = t_target - t
            hit = True
        t_new = t_target if hit else t + h_eff
        hit_disc = hit and idisc < nd and t_target == disc[idisc]

        # stages (k1 is FSAL: the stored derivative at the current node)
        k1 = fs[m - 1]
        t2 = t + 0.5 * h_eff
        for i in range(n):
            ystage[i] = ys[m - 1, i] + 0.5 * h_eff * k1[i]
        _eval_state(t2 - tau, tau, hknots, hvals, hders, ts, ys, fs, m, False, xd)
        rhs_eval(kind, par, ti, tf, ystage, xd, k2)
        t3 = t + 0.75 * h_eff
        for i in range(n):
            ystage[i] = ys[m - 1, i] + 0.75 * h_eff * k2[i]
        _eval_state(t3 - tau, tau, hknots, hvals, hders, ts, ys, fs, m, False, xd)
        rhs_eval(kind, par, ti, tf, ystage, xd, k3)
        for i in range(n):
            ynew[i] = ys[m - 1, i] + h_eff * (2.0 * k1[i] + 3.0 * k2[i] + 4.0 * k3[i]) / 9.0
        # at a forced discontinuity node the step's own interval ends on the
        # left side of the jump, so k4 uses the left-limit delayed value
        _eval_state(t_new - tau, tau, hknots, hvals, hders, ts, ys, fs, m, hit_disc, xd)
        rhs_eval(kind, par, ti, tf, ynew, xd, k4)

        err = 0.0
        ok = True
        for i in range(n):
            if not math.isfinite(ynew[i]):
                ok = False
                break
            e = h_eff * (-5.0 * k1[i] / 72.0 + k2[i] / 12.0 + k3[i] / 9.0 - k4[i] / 8.0)
            ay = abs(ys[m - 1, i])
            an = abs(ynew[i])
            sc = atol + rtol * (ay if ay > an else an)
            r = e / sc
            err += r * r
        err = math.sqrt(err / n) if ok else 2.0

        if not ok or err > 1.0:
            fac = 0.2 if not ok else max(0.2, 0.9 * err ** (-1.0 / 3.0))
            h_prop = h_eff * min(0.9, fac)
            continue

        # accept
        if m + 2 > cap:
            cap *= 2
            nts = np.empty(cap)
            nys = np.empty((cap, n))
            nfs = np.empty((cap, n))
            nts[:m] = ts[:m]
            nys[:m] = ys[:m]
            nfs[:m] = fs[:m]
            ts = nts
            ys = nys
            fs = nfs
        ts[m] = t_new
        ys[m] = ynew
        fs[m] = k4
        m += 1
        if hit_disc:
            # duplicate node with the right-limit derivative for the next side
            _eval_state(t_new - tau, tau, hknots, hvals, hders, ts, ys, fs, m, False, xd)
            rhs_eval(kind, par, ti, tf, ynew, xd, k4)
            ts[m] = t_new
            ys[m] = ynew
            fs[m] = k4
            m += 1
            idisc += 1

        t = t_new

        nrm = 0.0
        for i in range(n):
            nrm += ynew[i] * ynew[i]
        if math.sqrt(nrm) > r_div:
            status = STATUS_BLOWUP
            t_term = t_new
            break

        if stop_mode != STOP_NONE and t_new >= tau:
            gate = 0.0
            for i in range(n):
                d = ynew[i] - xe[i]
                gate += d * d
            if gate < stop_delta * stop_delta and t_new >= t_last_stop_check + 0.125 * tau:
                t_last_stop_check = t_new
                val = _window_stop_value(t_new, tau, xe, hknots, hvals, hders,
                                         ts, ys, fs, m, stop_mode, mask_I,
                                         stop_samples, buf)
                if val < 0.97 * stop_delta:
                    status = STATUS_CONVERGED
                    t_term = t_new
                    break

        fac = 5.0
        if err > 1e-16:
            fac = min(5.0, max(0.2, 0.9 * err ** (-1.0 / 3.0)))
        cand = h_eff * fac
        if hit:
            if cand > h_prop:
                h_prop = cand
        else:
            h_prop = cand
        if h_prop > hmax:
            h_prop = hmax

    return status, t_term, ts[:m].copy(), ys[:m].copy(), fs[:m].copy()
