import numpy as np
import pytest

from attradius import models, norms, orbit, spectral
from attradius.segments import Segment


@pytest.fixture(scope="session")
def swing():
    return models.make_swing()


@pytest.fixture(scope="session")
def swing_hopf(swing):
    """(omega, tau) of the regain endpoint of the stable window holding tau=20."""
    prob = spectral.CharacteristicProblem.from_model(swing)
    wins = spectral.stability_windows(prob, 25.0)
    for w in wins:
        if w.lo <= 20.0 <= w.hi and w.hopf_left:
            return w.hopf_left
    raise RuntimeError("expected a regain endpoint below tau = 20")


@pytest.fixture(scope="session")
def swing_branch(swing, swing_hopf):
    """Cycle branch from the Hopf candidate continued to tau = 20."""
    orb0 = orbit.orbit_from_hopf(swing, swing_hopf, dtau=0.1)
    br = orbit.continue_branch(swing, orb0, 20.0)
    assert br.complete
    return br


@pytest.fixture(scope="session")
def cubic_tau1():
    return models.make_scalar_cubic(1.0)


@pytest.fixture
def q_space():
    return norms.quotient((1,))


def piecewise_linear_segment(knots, values):
    """Exact piecewise-linear Segment with duplicated interior knots."""
    knots = np.asarray(knots, dtype=float)
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if values.shape[0] != knots.size:
        values = values.T
    n = values.shape[1]
    ks, vs, ds = [], [], []
    for i in range(knots.size - 1):
        h = knots[i + 1] - knots[i]
        slope = (values[i + 1] - values[i]) / h
        ks.extend([knots[i], knots[i + 1]])
        vs.extend([values[i], values[i + 1]])
        ds.extend([slope, slope])
    keep = [0]
    for j in range(1, len(ks)):
        if ks[j] == ks[j - 1] and np.allclose(vs[j], vs[j - 1]) and \
                np.allclose(ds[j], ds[j - 1]):
            continue
        keep.append(j)
    knots_arr = np.array([ks[j] for j in keep])
    vals_arr = np.array([vs[j] for j in keep])
    ders_arr = np.array([ds[j] for j in keep])
    # interior kinks as breakpoints: keeps Simpson and the sup grid exact
    return Segment.from_table(knots_arr, vals_arr, ders_arr,
                              breakpoints=tuple(knots[1:-1]))
