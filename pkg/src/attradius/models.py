"""Built-in example systems and declarative user models.

Models are the one place that carries the quotient-partition metadata
(which state components enter the dynamics with delay): whether a history
matters is a modelling fact, not a norm-layer choice.
"""

from __future__ import annotations

import json
import math
from functools import partial
from typing import Sequence

import numpy as np

from . import _kernel
from .dde import Model


# module-level right-hand sides keep Model objects picklable for worker pools

def _swing_rhs(x, xd, a, a_tilde, w, ye):
    return np.array([x[1], -a * x[1] - a_tilde * xd[1] + w - math.sin(x[0] + ye)])


def _swing_jac(x, xd, a, A1, ye):
    return np.array([[0.0, 1.0], [-math.cos(x[0] + ye), -a]]), A1


def _cubic_rhs(x, xd):
    return np.array([-x[0] - xd[0] + x[0] ** 3])


def _cubic_jac(x, xd):
    return np.array([[-1.0 + 3.0 * x[0] ** 2]]), np.array([[-1.0]])


def _linear_rhs(x, xd, A0, A1):
    return A0 @ x + A1 @ xd


def _linear_jac(x, xd, A0, A1):
    return A0, A1


def char_split_from_matrices(A0: np.ndarray, A1: np.ndarray):
    """(P, Q) with det(lam*I - A0 - A1*e^(-lam*tau)) = P(lam) + Q(lam)*e^(-lam*tau).

    Available for n = 1 always and for n = 2 when det(A1) = 0 (single
    exponential); returns None otherwise.
    """
    A0 = np.asarray(A0, dtype=float)
    A1 = np.asarray(A1, dtype=float)
    n = A0.shape[0]
    if n == 1:
        return np.array([-A0[0, 0], 1.0]), np.array([-A1[0, 0]])
    if n == 2 and abs(np.linalg.det(A1)) < 1e-12 * (1.0 + np.abs(A1).max()) ** 2:
        (a00, a01), (a10, a11) = A0
        (b00, b01), (b10, b11) = A1
        P = np.array([a00 * a11 - a01 * a10, -(a00 + a11), 1.0])
        Q = np.array([a00 * b11 + a11 * b00 - a01 * b10 - a10 * b01, -(b00 + b11)])
        return P, Q
    return None


def make_swing(a: float = 0.05, a_tilde: float = 0.125, w: float = 0.5,
               tau: float = 20.0) -> Model:
    """Constantly driven pendulum with delayed damping, equilibrium at origin.

        x1' = x2
        x2' = -a*x2 - a_tilde*x2(t-tau) + w - sin(x1 + y_e),  y_e = arcsin(w)

    Only the second component enters with delay, so the quotient partition
    puts x2 in the delayed block and x1 in the instantaneous block.
    """
    if not (0.0 < w < 1.0):
        raise ValueError("drive w must lie in (0, 1)")
    if a <= 0 or a_tilde <= 0:
        raise ValueError("damping coefficients must be positive")
    ye = math.asin(w)
    cy = math.cos(ye)
    A0 = np.array([[0.0, 1.0], [-cy, -a]])
    A1 = np.array([[0.0, 0.0], [0.0, -a_tilde]])

    return Model(
        dim=2, tau=tau,
        rhs=partial(_swing_rhs, a=a, a_tilde=a_tilde, w=w, ye=ye),
        rhs_jac=partial(_swing_jac, a=a, A1=A1, ye=ye),
        jacobians=(A0, A1),
        char_poly=(np.array([cy, a, 1.0]), np.array([0.0, a_tilde])),
        block_I=(1,),
        name="swing",
        kernel_kind=_kernel.RHS_SWING,
        kernel_params=np.array([a, a_tilde, w, ye]),
    )


def make_scalar_cubic(tau: float) -> Model:
    """x'(t) = -x(t) - x(t - tau) + x(t)^3, equilibrium 0."""
    return Model(
        dim=1, tau=tau, rhs=_cubic_rhs, rhs_jac=_cubic_jac,
        jacobians=(np.array([[-1.0]]), np.array([[-1.0]])),
        char_poly=(np.array([1.0, 1.0]), np.array([1.0])),
        odd_symmetric=True,
        name="scalar-cubic",
        kernel_kind=_kernel.RHS_SCALAR_CUBIC,
    )


def make_linear(A0, A1, tau: float, name: str = "linear") -> Model:
    """x'(t) = A0 x(t) + A1 x(t - tau)."""
    A0 = np.atleast_2d(np.asarray(A0, dtype=float))
    A1 = np.atleast_2d(np.asarray(A1, dtype=float))
    if A0.shape != A1.shape or A0.shape[0] != A0.shape[1]:
        raise ValueError("matrices must be square and of equal size")
    n = A0.shape[0]

    return Model(
        dim=n, tau=tau,
        rhs=partial(_linear_rhs, A0=A0, A1=A1),
        rhs_jac=partial(_linear_jac, A0=A0, A1=A1),
        jacobians=(A0, A1),
        char_poly=char_split_from_matrices(A0, A1),
        odd_symmetric=True,
        name=name,
        kernel_kind=_kernel.RHS_LINEAR,
        kernel_params=np.concatenate([A0.ravel(), A1.ravel()]),
    )


_FN_CODES = {"sin": _kernel.FAC_SIN, "cos": _kernel.FAC_COS}
_VAR_CODES = {"x": 0, "xd": 1}


def _pack_terms(rows: Sequence[Sequence[dict]], n: int):
    ti = []
    tf = []
    nterms = 0
    for row, terms in enumerate(rows):
        for term in terms:
            coef = float(term.get("coef", 1.0))
            factors = term.get("factors", [])
            ti.extend([row, len(factors)])
            tf.append(coef)
            for fac in factors:
                if "fn" in fac:
                    fn = fac["fn"]
                    if fn not in _FN_CODES:
                        raise ValueError(f"unknown factor function {fn!r}")
                    var = _VAR_CODES[fac.get("var", "x")]
                    idx = int(fac["index"])
                    if not 0 <= idx < n:
                        raise ValueError("factor index out of range")
                    ti.extend([_FN_CODES[fn], var, idx])
                    tf.extend([float(fac.get("scale", 1.0)), float(fac.get("shift", 0.0))])
                else:
                    var = _VAR_CODES[fac.get("var", "x")]
                    idx = int(fac["index"])
                    if not 0 <= idx < n:
                        raise ValueError("factor index out of range")
                    power = int(fac.get("power", 1))
                    if power < 1:
                        raise ValueError("factor power must be >= 1")
                    ti.extend([_kernel.FAC_POW, var, idx])
                    tf.append(float(power))
            nterms += 1
    return (np.asarray([nterms] + ti, dtype=np.int64),
            np.asarray(tf, dtype=np.float64))


def model_from_dict(spec: dict) -> Model:
    """Build a model from a declarative polynomial/trigonometric description.

    Shape::

        {"name": str, "dimension": n, "tau": float,
         "equilibrium": [..] (optional, default origin),
         "rhs": [[term, ...], ...]   # one term list per component
         "block_I": [..] (optional), "odd_symmetric": bool (optional)}

    with term = {"coef": c, "factors": [factor, ...]} and factor either
    {"var": "x"|"xd", "index": i, "power": p} or
    {"fn": "sin"|"cos", "var": ..., "index": i, "scale": a, "shift": b}.
    """
    try:
        n = int(spec["dimension"])
        tau = float(spec["tau"])
        rows = spec["rhs"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"invalid model description: {exc}") from exc
    if len(rows) != n:
        raise ValueError("rhs must have one term list per component")
    ti, tf = _pack_terms(rows, n)
    block = spec.get("block_I")
    return Model(
        dim=n, tau=tau,
        equilibrium=np.asarray(spec.get("equilibrium", np.zeros(n)), dtype=float),
        block_I=tuple(block) if block else None,
        odd_symmetric=bool(spec.get("odd_symmetric", False)),
        name=str(spec.get("name", "user-model")),
        kernel_kind=_kernel.RHS_TERMS,
        kernel_ti=ti, kernel_tf=tf,
    )


def model_from_json(source) -> Model:
    with open(source, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
