"""Parameterized families of initial functions.

Scalar profile kinds (constant, jump, linear, sinusoidal) are normalized so
that the uniform norm of the profile equals |p|; a vector family assigns one
profile kind per component (each consuming one scalar parameter). Basis
families span trigonometric, Legendre, or Bernstein functions with a full
coefficient array. Families are linear in their parameters, so
phi(.;-p) = -phi(.;p) pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .segments import Segment


class UnsupportedFamilyError(ValueError):
    """Raised when an operation needs smoothness the family cannot provide."""


# -- scalar profiles ---------------------------------------------------------


class ScalarProfile:
    breakpoints: Tuple[float, ...] = ()

    def values(self, th: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def values_left(self, th: np.ndarray) -> np.ndarray:
        return self.values(th)

    def d_values(self, th: np.ndarray) -> np.ndarray:
        """Pointwise derivative used for table lowering (a.e. for jumps)."""
        raise NotImplementedError

    def derivative(self) -> "ScalarProfile":
        raise UnsupportedFamilyError(
            f"{type(self).__name__} has no closed-form derivative")


@dataclass(frozen=True)
class ConstantProfile(ScalarProfile):
    c: float

    def values(self, th):
        return np.full_like(np.asarray(th, float), self.c)

    def d_values(self, th):
        return np.zeros_like(np.asarray(th, float))

    def derivative(self):
        return ConstantProfile(0.0)


@dataclass(frozen=True)
class PolyProfile(ScalarProfile):
    """Power-basis polynomial in theta."""

    coeffs: Tuple[float, ...]  # low -> high

    def values(self, th):
        return np.polynomial.polynomial.polyval(np.asarray(th, float), self.coeffs)

    def d_values(self, th):
        der = np.polynomial.polynomial.polyder(self.coeffs)
        return np.polynomial.polynomial.polyval(np.asarray(th, float), der)

    def derivative(self):
        der = np.polynomial.polynomial.polyder(self.coeffs)
        return PolyProfile(tuple(np.atleast_1d(der)))


@dataclass(frozen=True)
class SineProfile(ScalarProfile):
    """amp * sin(omega * theta + phase); cos enters with phase pi/2."""

    amp: float
    omega: float
    phase: float = 0.0

    def values(self, th):
        return self.amp * np.sin(self.omega * np.asarray(th, float) + self.phase)

    def d_values(self, th):
        return self.amp * self.omega * np.cos(self.omega * np.asarray(th, float) + self.phase)

    def derivative(self):
        return SineProfile(self.amp * self.omega, self.omega, self.phase + 0.5 * math.pi)


@dataclass(frozen=True)
class JumpProfile(ScalarProfile):
    """0 on [-tau, 0), p at theta = 0 (right value)."""

    p: float
    breakpoints: Tuple[float, ...] = (0.0,)

    def values(self, th):
        th = np.asarray(th, float)
        return np.where(th >= 0.0, self.p, 0.0)

    def values_left(self, th):
        th = np.asarray(th, float)
        return np.zeros_like(th)

    def d_values(self, th):
        return np.zeros_like(np.asarray(th, float))


@dataclass(frozen=True)
class SumProfile(ScalarProfile):
    parts: Tuple[ScalarProfile, ...]

    @property
    def breakpoints(self):
        bps = []
        for p in self.parts:
            bps.extend(p.breakpoints)
        return tuple(sorted(set(bps)))

    def values(self, th):
        return sum(p.values(th) for p in self.parts)

    def values_left(self, th):
        return sum(p.values_left(th) for p in self.parts)

    def d_values(self, th):
        return sum(p.d_values(th) for p in self.parts)

    def derivative(self):
        return SumProfile(tuple(p.derivative() for p in self.parts))


SCALAR_KINDS = ("constant", "jump", "linear-increasing", "linear-decreasing",
                "cosine", "sine")
BASIS_KINDS = ("trig", "legendre", "bernstein")


def _scalar_profile(kind: str, p: float, tau: float, omega: Optional[float]) -> ScalarProfile:
    if kind == "constant":
        return ConstantProfile(p)
    if kind == "jump":
        return JumpProfile(p)
    if kind == "linear-increasing":
        # p * (theta + tau) / tau
        return PolyProfile((p, p / tau))
    if kind == "linear-decreasing":
        # p * theta / tau
        return PolyProfile((0.0, p / tau))
    w = omega if omega is not None else 4.0 * math.pi / tau
    if w <= 0:
        raise ValueError("sinusoid frequency must be positive")
    if kind == "cosine":
        # sup |cos(w theta)| on [-tau, 0] is attained at 0
        return SineProfile(p, w, 0.5 * math.pi)
    if kind == "sine":
        s = 1.0 if w * tau >= 0.5 * math.pi else math.sin(w * tau)
        return SineProfile(p / s, w)
    raise ValueError(f"unknown family kind {kind!r}")


# -- family specifications ---------------------------------------------------


@dataclass(frozen=True)
class FamilySpec:
    """Declarative description of a family of initial functions.

    Exactly one of ``kinds`` (per-component scalar profiles), ``basis``
    (basis expansion of every component), or ``table`` (a fixed segment
    scaled by one parameter) is set.
    """

    kinds: Optional[Tuple[str, ...]] = None
    omega: Optional[float] = None
    basis: Optional[str] = None
    degree: int = 0
    dim: int = 1
    table: Optional[tuple] = None
    name: str = ""

    def __post_init__(self):
        chosen = sum(x is not None for x in (self.kinds, self.basis, self.table))
        if chosen != 1:
            raise ValueError("exactly one of kinds / basis / table must be given")
        if self.kinds is not None:
            for k in self.kinds:
                if k not in SCALAR_KINDS:
                    raise ValueError(f"unknown family kind {k!r}")
            object.__setattr__(self, "dim", len(self.kinds))
        if self.basis is not None:
            if self.basis not in BASIS_KINDS:
                raise ValueError(f"unknown basis {self.basis!r}")
            if self.degree < 0:
                raise ValueError("degree must be nonnegative")
        if not self.name:
            object.__setattr__(self, "name", self._default_name())

    def _default_name(self) -> str:
        if self.kinds is not None:
            return "+".join(self.kinds)
        if self.basis is not None:
            return f"basis-{self.basis}-d{self.degree}"
        return "table"

    @property
    def basis_count(self) -> int:
        if self.basis == "trig":
            return 2 * self.degree + 1
        return self.degree + 1

    @property
    def param_dim(self) -> int:
        if self.kinds is not None:
            return len(self.kinds)
        if self.basis is not None:
            return self.dim * self.basis_count
        return 1

    @property
    def symmetric(self) -> bool:
        """phi(.;-p) = -phi(.;p); true for every built-in family."""
        return True


def scalar_family(kind: str, omega: Optional[float] = None) -> FamilySpec:
    return FamilySpec(kinds=(kind,), omega=omega)


def swing_family(kind: str, omega: Optional[float] = None) -> FamilySpec:
    """Constant first component (angle offset), profile kind for the second."""
    return FamilySpec(kinds=("constant", kind), omega=omega)


def basis_family(basis: str, degree: int, dim: int = 1) -> FamilySpec:
    return FamilySpec(basis=basis, degree=degree, dim=dim)


def family_from_table(knots, vals, ders, name: str = "table") -> FamilySpec:
    knots = np.asarray(knots, float)
    vals = np.asarray(vals, float)
    ders = np.asarray(ders, float)
    return FamilySpec(table=(knots, vals, ders), dim=vals.shape[1], name=name)


def _basis_profiles(basis: str, degree: int, tau: float) -> list:
    """The scalar basis functions b_1 .. b_count on [-tau, 0]."""
    out = []
    if basis == "trig":
        out.append(ConstantProfile(1.0))
        for k in range(1, degree + 1):
            w = 2.0 * math.pi * k / tau
            out.append(SineProfile(1.0, w, 0.5 * math.pi))  # cos
            out.append(SineProfile(1.0, w))                 # sin
        return out
    Poly = np.polynomial.polynomial.Polynomial
    for i in range(degree + 1):
        if basis == "legendre":
            coef = np.zeros(i + 1)
            coef[i] = 1.0
            coef_u = np.polynomial.legendre.leg2poly(coef)  # power series in u
            u = Poly([1.0, 2.0 / tau])  # u(theta) = 2 theta / tau + 1 on [-tau, 0]
            poly = sum((c * u ** k for k, c in enumerate(coef_u)), Poly([0.0]))
        else:  # bernstein: C(d,i) s^i (1-s)^(d-i), s = (theta + tau)/tau
            d = degree
            s = Poly([1.0, 1.0 / tau])
            one_minus_s = Poly([0.0, -1.0 / tau])
            poly = math.comb(d, i) * s ** i * one_minus_s ** (d - i)
        out.append(PolyProfile(tuple(poly.coef)))
    return out


class ClosedFormSegment(Segment):
    """A family segment carrying its per-component scalar profiles."""

    def __init__(self, profiles: Sequence[ScalarProfile], tau: float):
        self.profiles = list(profiles)
        n = len(self.profiles)
        bp = sorted(set(b for pr in self.profiles for b in pr.breakpoints))

        def fn(th):
            th = np.atleast_1d(np.asarray(th, float))
            return np.column_stack([pr.values(th) for pr in self.profiles])

        def fn_left(th):
            th = np.atleast_1d(np.asarray(th, float))
            return np.column_stack([pr.values_left(th) for pr in self.profiles])

        def deriv(th):
            th = np.atleast_1d(np.asarray(th, float))
            return np.column_stack([pr.d_values(th) for pr in self.profiles])

        super().__init__(tau, n, bp, fn=fn, fn_left=fn_left, deriv=deriv)


def instantiate(spec: FamilySpec, p, tau: float) -> Segment:
    """The family member phi(.; p) on [-tau, 0] with exact evaluation."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    p = np.atleast_1d(np.asarray(p, dtype=float)).ravel()
    if p.size != spec.param_dim:
        raise ValueError(
            f"family {spec.name!r} expects {spec.param_dim} parameters, got {p.size}")
    if spec.kinds is not None:
        profiles = [_scalar_profile(k, float(pi), tau, spec.omega)
                    for k, pi in zip(spec.kinds, p)]
        return ClosedFormSegment(profiles, tau)
    if spec.basis is not None:
        bases = _basis_profiles(spec.basis, spec.degree, tau)
        coeffs = p.reshape(spec.dim, spec.basis_count)
        profiles = []
        for row in coeffs:
            parts = []
            for c, b in zip(row, bases):
                parts.append(_scale_profile(b, float(c)))
            profiles.append(SumProfile(tuple(parts)))
        return ClosedFormSegment(profiles, tau)
    knots, vals, ders = spec.table
    ratio = tau / (-knots[0])
    return Segment.from_table(knots * ratio, vals * float(p[0]),
                              ders * float(p[0]) / ratio)


def _scale_profile(profile: ScalarProfile, c: float) -> ScalarProfile:
    if isinstance(profile, ConstantProfile):
        return ConstantProfile(c * profile.c)
    if isinstance(profile, PolyProfile):
        return PolyProfile(tuple(c * np.asarray(profile.coeffs)))
    if isinstance(profile, SineProfile):
        return SineProfile(c * profile.amp, profile.omega, profile.phase)
    if isinstance(profile, JumpProfile):
        return JumpProfile(c * profile.p)
    if isinstance(profile, SumProfile):
        return SumProfile(tuple(_scale_profile(q, c) for q in profile.parts))
    raise TypeError(f"cannot scale {type(profile).__name__}")


def scalar_lift(y_history: Segment, order: int) -> Segment:
    """Lift a scalar profile to [y, y', ..., y^(order-1)].

    Needed when the state vector collects successive derivatives of one
    physical variable, so only a scalar initial profile is free.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    if y_history.dim != 1:
        raise ValueError("scalar_lift needs a scalar segment")
    if not isinstance(y_history, ClosedFormSegment):
        raise UnsupportedFamilyError("scalar_lift needs a closed-form family segment")
    prof = y_history.profiles[0]
    chain = [prof]
    for _ in range(order - 1):
        chain.append(chain[-1].derivative())
    return ClosedFormSegment(chain, y_history.tau)
