import math

import numpy as np
import pytest

from attradius import models, norms, orbit
from attradius.orbit import (OrbitGuess, OrbitSolveError, PeriodicOrbit,
                             _gauss_points, _lagrange_vd, continue_branch,
                             hopf_seed, min_norm_on_cycle, solve_periodic)


def _cosine_guess(amp=1.0, period=4.0):
    def prof(that):
        that = np.atleast_1d(that)
        return amp * np.cos(2 * np.pi * that)[:, None]

    def dprof(that):
        that = np.atleast_1d(that)
        return -2 * np.pi * amp * np.sin(2 * np.pi * that)[:, None]

    return OrbitGuess(prof, dprof, period)


def test_linear_exact_cycle_confirmed():
    # x' = -(pi/2) x(t-1) at its crossing: cos(pi t / 2), T = 4, tau/T = 1/4
    m = models.make_linear([[0.0]], [[-np.pi / 2]], tau=1.0)
    orb = solve_periodic(m, 1.0, _cosine_guess(), L=20, m=4)
    assert orb.residual < 1e-9
    assert orb.period == pytest.approx(4.0, abs=1e-8)
    that = np.linspace(0.0, 1.0, 257)
    err = orb.eval(that)[:, 0] - np.cos(2 * np.pi * that)
    assert np.max(np.abs(err)) < 1e-6
    assert orb.closure_gap < 1e-8
    assert orb.delay_ratio == pytest.approx(0.25, abs=1e-8)


def test_hopf_seed_equilibrium_at_zero_amplitude(swing, swing_hopf):
    guess = hopf_seed(swing, swing_hopf, amplitude=0.0)
    grid = np.linspace(0.0, 1.0, 17)
    prof = guess.profile(grid)
    assert np.allclose(prof, swing.equilibrium)
    # the algebraic part of the collocation residual vanishes identically
    for z in prof:
        assert np.allclose(swing.f(z, z), 0.0, atol=1e-14)
    assert guess.period == pytest.approx(2 * math.pi / swing_hopf[0])


def test_hopf_seed_sign_flip_is_half_period_shift(swing, swing_hopf):
    plus = hopf_seed(swing, swing_hopf, amplitude=0.05)
    minus = hopf_seed(swing, swing_hopf, amplitude=-0.05)
    that = np.linspace(0.0, 1.0, 33)
    assert np.allclose(minus.profile(that), plus.profile(that + 0.5), atol=1e-12)


def test_first_orbit_converges_quickly(swing_branch):
    first = swing_branch.points[0][1]
    assert first.n_iterations <= 10
    assert first.residual < 1e-9


def test_swing_orbit_period_and_closure(swing_branch):
    final = swing_branch.points[-1][1]
    assert final.tau == pytest.approx(20.0)
    assert final.period == pytest.approx(7.4, abs=0.1)
    assert final.closure_gap < 1e-8
    assert final.residual < 1e-9


def test_phase_condition_magnitude(swing_branch):
    orb = swing_branch.points[-1][1]
    ref = PeriodicOrbit(orb.tau, orb.period, orb.L, orb.degree, orb.phase_ref,
                        0.0, orb.phase_ref)
    cg, wg = _gauss_points(orb.degree)
    local = np.linspace(0.0, 1.0, orb.degree + 1)
    acc = 0.0
    for i in range(orb.L):
        for q in range(orb.degree):
            c = (i + cg[q]) / orb.L
            zdot_ref = ref.eval(c, deriv=True)[0]
            acc += wg[q] / orb.L * float(zdot_ref @ orb.eval(c)[0])
    assert abs(acc) < 1e-10


def test_mesh_refinement_self_consistency(swing, swing_branch):
    final = swing_branch.points[-1][1]
    refined = solve_periodic(swing, 20.0, final.resampled(80, 4), L=80, m=4)
    assert abs(refined.period - final.period) < 1e-6


def test_independence_of_path(swing, swing_branch):
    final = swing_branch.points[-1][1]
    direct = solve_periodic(swing, 20.0, final)
    assert abs(direct.period - final.period) < 1e-6


def test_branch_identity_when_target_equals_start(swing, swing_branch):
    seed = swing_branch.points[0][1]
    br = continue_branch(swing, seed, seed.tau)
    assert len(br.points) == 1
    assert br.complete


def test_amplitude_grows_with_delay_near_onset(swing_branch):
    amps = [orbit.amplitude(ob) for _, ob in swing_branch.points]
    assert all(b > a for a, b in zip(amps[:-1], amps[1:]))


def test_min_norm_on_cycle_swing_values(swing, swing_branch):
    final = swing_branch.points[-1][1]
    rq, tq = min_norm_on_cycle(final, norms.quotient((1,)))
    rc, _ = min_norm_on_cycle(final, norms.uniform())
    assert rq == pytest.approx(0.507, abs=0.01)
    assert rc > rq
    assert 0.0 <= tq < final.period


def test_min_norm_phase_grid_stability(swing_branch):
    final = swing_branch.points[-1][1]
    space = norms.quotient((1,))
    v128, _ = min_norm_on_cycle(final, space, n_phase=128)
    v256, _ = min_norm_on_cycle(final, space, n_phase=256)
    assert abs(v128 - v256) < 1e-4


def test_constant_fake_orbit_min_norms():
    d = 0.75
    tau = 2.0
    nodes = np.tile([0.0, d], (41, 1))  # block II component zero, block I at d
    orb = PeriodicOrbit(tau, 5.0, 10, 4, nodes, 0.0, nodes)
    assert min_norm_on_cycle(orb, norms.uniform())[0] == pytest.approx(d, abs=1e-9)
    assert min_norm_on_cycle(orb, norms.quotient((1,)))[0] == pytest.approx(d, abs=1e-9)
    # M2 of a constant segment carries the integral weight
    assert min_norm_on_cycle(orb, norms.m2())[0] == pytest.approx(
        d * (1 + math.sqrt(tau)), abs=1e-9)


def test_degenerate_orbit_rejected():
    nodes = np.zeros((41, 2))
    orb = PeriodicOrbit(2.0, 5.0, 10, 4, nodes, 0.0, nodes)
    with pytest.raises(OrbitSolveError):
        min_norm_on_cycle(orb, norms.uniform())


def test_newton_failure_reports_residual(swing):
    bad = _cosine_guess(amp=50.0, period=1.0)

    def prof2(that):
        that = np.atleast_1d(that)
        return 50.0 * np.column_stack([np.cos(2 * np.pi * that),
                                       np.sin(2 * np.pi * that)])

    def dprof2(that):
        that = np.atleast_1d(that)
        return 100.0 * np.pi * np.column_stack([-np.sin(2 * np.pi * that),
                                                np.cos(2 * np.pi * that)])

    with pytest.raises(OrbitSolveError):
        solve_periodic(swing, 20.0, OrbitGuess(prof2, dprof2, 1.0),
                       L=10, m=3, max_iter=6)


def test_lagrange_basis_partition():
    nodes = np.linspace(0.0, 1.0, 5)
    v, d = _lagrange_vd(nodes, 0.3)
    assert np.sum(v) == pytest.approx(1.0, abs=1e-12)
    assert np.sum(d) == pytest.approx(0.0, abs=1e-10)
