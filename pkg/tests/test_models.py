import json
import math

import numpy as np
import pytest

from attradius import models
from attradius.models import (char_split_from_matrices, make_linear,
                              make_scalar_cubic, make_swing, model_from_dict,
                              model_from_json)


def test_swing_equilibrium_and_values(swing):
    assert np.allclose(swing.f([0.0, 0.0], [0.0, 0.0]), 0.0)
    # d f2 / d x1 at the origin is -cos(arcsin(0.5)) = -sqrt(3)/2
    A0, A1 = swing.linearization()
    assert A0[1, 0] == pytest.approx(-math.sqrt(3.0) / 2.0)
    assert A0[0, 1] == 1.0
    assert A1[1, 1] == pytest.approx(-0.125)
    assert swing.block_I == (1,)


def test_scalar_cubic_value():
    m = make_scalar_cubic(1.0)
    assert m.f([1.0], [0.0])[0] == pytest.approx(-1.0 - 0.0 + 1.0)
    assert m.odd_symmetric


def test_swing_parameter_validation():
    with pytest.raises(ValueError):
        make_swing(w=1.5)
    with pytest.raises(ValueError):
        make_swing(a=-0.1)


def test_fd_jacobians_match_analytic(swing):
    rng = np.random.default_rng(2)
    for _ in range(20):
        x = rng.normal(scale=0.3, size=2)
        xd = rng.normal(scale=0.3, size=2)
        J0a, J1a = swing.jac(x, xd)
        stripped = models.Model(dim=2, tau=swing.tau, rhs=swing.rhs)
        J0f, J1f = stripped.jac(x, xd)
        assert np.allclose(J0f, J0a, rtol=1e-6, atol=1e-6)
        assert np.allclose(J1f, J1a, rtol=1e-6, atol=1e-6)


def test_characteristic_reduction_matches_determinant(swing):
    rng = np.random.default_rng(3)
    for m in (swing, make_scalar_cubic(2.0)):
        P, Q = m.char_poly
        for _ in range(10):
            lam = complex(rng.normal(), rng.normal())
            hv = (np.polyval(P[::-1], lam)
                  + np.polyval(Q[::-1], lam) * np.exp(-lam * m.tau))
            A0, A1 = m.linearization()
            dv = np.linalg.det(lam * np.eye(m.dim) - A0 - A1 * np.exp(-lam * m.tau))
            assert abs(hv - dv) <= 1e-10 * max(1.0, abs(dv))


def test_char_split_rank_deficient_only():
    full = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert char_split_from_matrices(full, full) is None  # det(A1) != 0


def test_equilibrium_must_be_root():
    with pytest.raises(ValueError):
        models.Model(dim=1, tau=1.0, rhs=lambda x, xd: np.array([1.0]))


def test_declarative_model_swing_equivalent(tmp_path, swing):
    ye = math.asin(0.5)
    spec = {
        "name": "swing-json",
        "dimension": 2,
        "tau": 20.0,
        "rhs": [
            [{"coef": 1.0, "factors": [{"var": "x", "index": 1}]}],
            [
                {"coef": -0.05, "factors": [{"var": "x", "index": 1}]},
                {"coef": -0.125, "factors": [{"var": "xd", "index": 1}]},
                {"coef": 0.5, "factors": []},
                {"coef": -1.0,
                 "factors": [{"fn": "sin", "var": "x", "index": 0,
                              "scale": 1.0, "shift": ye}]},
            ],
        ],
        "block_I": [1],
    }
    path = tmp_path / "model.json"
    path.write_text(json.dumps(spec))
    m = model_from_json(path)
    rng = np.random.default_rng(4)
    for _ in range(20):
        x = rng.normal(scale=0.5, size=2)
        xd = rng.normal(scale=0.5, size=2)
        assert np.allclose(m.f(x, xd), swing.f(x, xd), atol=1e-12)


def test_declarative_model_validation():
    with pytest.raises(ValueError):
        model_from_dict({"dimension": 2, "tau": 1.0, "rhs": [[]]})
    with pytest.raises(ValueError):
        model_from_dict({"dimension": 1, "tau": 1.0,
                         "rhs": [[{"coef": 1.0,
                                   "factors": [{"var": "x", "index": 5}]}]]})
    with pytest.raises(ValueError):
        model_from_dict({"tau": 1.0, "rhs": []})


def test_declarative_model_integrates_on_kernel_path(tmp_path):
    spec = {
        "name": "decay", "dimension": 1, "tau": 1.0,
        "rhs": [[{"coef": -1.0, "factors": [{"var": "x", "index": 0}]},
                 {"coef": -1.0, "factors": [{"var": "xd", "index": 0}]}]],
    }
    m = model_from_dict(spec)
    from attradius import dde
    from attradius.segments import Segment
    traj = dde.integrate(m, Segment.constant([1.0], 1.0), 5.0)
    ref = make_linear([[-1.0]], [[-1.0]], tau=1.0)
    traj_ref = dde.integrate(ref, Segment.constant([1.0], 1.0), 5.0)
    ts = np.linspace(0, 5, 51)
    assert np.allclose(traj.state_values(ts), traj_ref.state_values(ts), atol=1e-12)
