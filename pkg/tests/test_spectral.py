import math

import numpy as np
import pytest

from attradius import models
from attradius.spectral import (CharacteristicProblem, crossings,
                                rightmost_roots, rightmost_roots_detailed,
                                spectral_abscissa, stability_windows)

from oracles import swing_crossing_delays, swing_crossing_frequencies


def test_pure_ode_root():
    prob = CharacteristicProblem([[-2.0]], [[0.0]], tau=1.0,
                                 P=np.array([2.0, 1.0]), Q=np.array([0.0]))
    roots = rightmost_roots(prob, N=16, m=1)
    assert roots[0] == pytest.approx(-2.0, abs=1e-10)


def test_hayes_crossing_analytic():
    # x' = -x(t - tau): first crossing at (omega, tau) = (1, pi/2)
    prob = CharacteristicProblem([[0.0]], [[-1.0]], tau=math.pi / 2,
                                 P=np.array([0.0, 1.0]), Q=np.array([1.0]))
    cs = crossings(prob)
    assert len(cs.branches) == 1
    br = cs.branches[0]
    assert br.omega == pytest.approx(1.0, abs=1e-8)
    assert br.taus[0] == pytest.approx(math.pi / 2, abs=1e-8)
    assert br.directions[0] == 1
    roots = rightmost_roots(prob, m=2)
    assert sorted(np.round(roots.imag, 8).tolist()) == [-1.0, 1.0]
    assert np.max(np.abs(roots.real)) < 1e-8


def test_scalar_cubic_linearization_stable_any_delay():
    # |i w + 1| > 1 for every w != 0 and h(0) = 2: no crossings at all
    m = models.make_scalar_cubic(1.0)
    prob = CharacteristicProblem.from_model(m)
    assert len(crossings(prob).branches) == 0
    assert spectral_abscissa(prob) < 0
    assert spectral_abscissa(CharacteristicProblem.from_model(
        models.make_scalar_cubic(5.0))) < 0


def test_swing_crossings_match_polynomial_oracle(swing):
    prob = CharacteristicProblem.from_model(swing)
    cs = crossings(prob)
    got_w = sorted(br.omega for br in cs.branches)
    ref_w = swing_crossing_frequencies(0.05, 0.125, 0.5)
    assert len(got_w) == len(ref_w) == 2
    for g, r in zip(got_w, ref_w):
        assert g == pytest.approx(r, abs=1e-9)
    for br in cs.branches:
        ref_taus = swing_crossing_delays(0.05, 0.125, 0.5, br.omega, len(br.taus))
        assert np.allclose(br.taus, ref_taus, atol=1e-8)


def test_swing_windows_and_root_count_constancy(swing):
    prob = CharacteristicProblem.from_model(swing)
    wins = stability_windows(prob, 25.0)
    assert all(w.consistent for w in wins)
    inside = [w for w in wins if w.lo <= 20.0 <= w.hi]
    assert len(inside) == 1
    assert inside[0].hopf_left is not None
    w_h, tau_h = inside[0].hopf_left
    assert tau_h == pytest.approx(inside[0].lo)
    # windows are disjoint and ordered
    for a, b in zip(wins[:-1], wins[1:]):
        assert a.hi <= b.lo
    # abscissa sign flips outside the window, stays negative inside
    lo, hi = inside[0].lo, inside[0].hi
    from dataclasses import replace
    assert spectral_abscissa(replace(prob, tau=0.5 * (lo + hi))) < 0
    assert spectral_abscissa(replace(prob, tau=lo - 0.5)) > 0
    assert spectral_abscissa(replace(prob, tau=hi + 0.5)) > 0


def test_delay_free_stable_single_window():
    m = models.make_linear([[-1.0]], [[-0.2]], tau=1.0)
    prob = CharacteristicProblem.from_model(m)
    wins = stability_windows(prob, 10.0)
    assert len(wins) == 1
    assert wins[0].lo == 0.0 and wins[0].hi == 10.0


def test_random_problems_residual_and_conjugacy():
    rng = np.random.default_rng(42)
    checked = 0
    for _ in range(100):
        n = int(rng.integers(1, 4))
        A0 = rng.normal(size=(n, n))
        A1 = 0.5 * rng.normal(size=(n, n))
        tau = float(rng.uniform(0.1, 3.0))
        prob = CharacteristicProblem(A0, A1, tau)
        roots = rightmost_roots_detailed(prob, N=24, m=6)
        assert roots, "no roots survived the residual filter"
        lams = np.array([r.lam for r in roots])
        for r in roots:
            assert r.residual < 1e-8
            if abs(r.lam.imag) > 1e-9:
                partner = np.min(np.abs(lams - r.lam.conjugate()))
                assert partner < 1e-6 * (1.0 + abs(r.lam))
        checked += 1
    assert checked == 100


def test_discretization_convergence_swing(swing):
    prob = CharacteristicProblem.from_model(swing)
    r32 = rightmost_roots(prob, N=32, m=1)[0]
    r64 = rightmost_roots(prob, N=64, m=1)[0]
    assert abs(r32 - r64) < 1e-6
    assert r32.imag > 0  # deterministic pair ordering


def test_reduction_consistency_guard():
    with pytest.raises(ValueError):
        CharacteristicProblem([[-1.0]], [[-1.0]], tau=1.0,
                              P=np.array([2.0, 1.0]), Q=np.array([0.5]))


def test_crossings_need_reduction():
    prob = CharacteristicProblem(np.eye(2) * -1, np.eye(2) * 0.1, tau=1.0)
    with pytest.raises(ValueError):
        crossings(prob)


def test_no_crossing_when_delay_term_weak():
    # |a / a_tilde| > 1 analogue: delayed feedback too weak to destabilize
    m = models.make_linear([[-2.0]], [[-0.5]], tau=1.0)
    prob = CharacteristicProblem.from_model(m)
    assert crossings(prob).branches == []
