import numpy as np
import pytest

from attradius import families, norms
from attradius.families import (FamilySpec, UnsupportedFamilyError, instantiate,
                                scalar_lift)


def test_jump_example_values():
    tau = 2.0
    seg = instantiate(families.scalar_family("jump"), [0.7], tau)
    assert seg.eval(-tau / 2)[0, 0] == 0.0
    assert seg.eval(0.0)[0, 0] == pytest.approx(0.7)
    assert seg.breakpoints.tolist() == [0.0]


def test_cosine_omega_default_and_norm():
    tau = 8.0
    spec = families.swing_family("cosine")  # omega defaults to 4 pi / tau
    seg = instantiate(spec, [0.0, 0.9], tau)
    assert seg.eval(0.0)[0, 1] == pytest.approx(0.9)
    # two full periods over the delay window
    assert seg.eval(-tau / 2)[0, 1] == pytest.approx(0.9)
    assert norms.norm(norms.uniform(), seg) == pytest.approx(0.9, abs=1e-9)


def test_legendre_degree1_affine():
    tau = 5.0
    seg = instantiate(families.basis_family("legendre", 1), [0.0, 0.3], tau)
    assert seg.eval(-tau)[0, 0] == pytest.approx(-0.3)
    assert seg.eval(0.0)[0, 0] == pytest.approx(0.3)
    assert seg.eval(-tau / 2)[0, 0] == pytest.approx(0.0, abs=1e-12)


def test_bernstein_partition_of_unity():
    tau = 3.0
    spec = families.basis_family("bernstein", 3)
    seg = instantiate(spec, np.ones(4), tau)
    th = np.linspace(-tau, 0.0, 41)
    assert np.allclose(seg.eval(th), 1.0)


def test_trig_basis_counts():
    spec = families.basis_family("trig", 2, dim=2)
    assert spec.basis_count == 5
    assert spec.param_dim == 10
    seg = instantiate(spec, np.arange(10, dtype=float) / 10.0, 2.0)
    assert seg.dim == 2


def test_normalization_invariant_all_kinds():
    tau = 7.0
    space = norms.uniform()
    rng = np.random.default_rng(0)
    for kind in families.SCALAR_KINDS:
        for _ in range(5):
            p = float(rng.uniform(-1e6, 1e6))
            seg = instantiate(families.scalar_family(kind), [p], tau)
            assert norms.norm(space, seg) == pytest.approx(abs(p), rel=1e-9)
    # a sine with a window shorter than a quarter period still normalizes
    seg = instantiate(families.scalar_family("sine", omega=0.1), [2.0], tau)
    assert norms.norm(space, seg) == pytest.approx(2.0, rel=1e-9)


def test_pointwise_symmetry():
    tau = 4.0
    th = np.linspace(-tau, 0.0, 57)
    for kind in families.SCALAR_KINDS:
        spec = families.scalar_family(kind)
        a = instantiate(spec, [1.3], tau).eval(th)
        b = instantiate(spec, [-1.3], tau).eval(th)
        assert np.allclose(a, -b)


def test_wrong_parameter_dimension():
    with pytest.raises(ValueError):
        instantiate(families.swing_family("constant"), [1.0], 2.0)
    with pytest.raises(ValueError):
        instantiate(families.basis_family("legendre", 2), [1.0, 2.0], 2.0)


def test_scalar_lift_constant_and_sine():
    tau = 3.0
    seg = instantiate(families.scalar_family("constant"), [2.0], tau)
    lifted = scalar_lift(seg, 2)
    th = np.linspace(-tau, 0.0, 11)
    v = lifted.eval(th)
    assert np.allclose(v[:, 0], 2.0)
    assert np.allclose(v[:, 1], 0.0)

    w = 1.7
    seg = instantiate(families.scalar_family("sine", omega=w), [0.5], tau)
    lifted = scalar_lift(seg, 2)
    v = lifted.eval(th)
    scale = 0.5  # omega*tau > pi/2, no renormalization factor
    assert np.allclose(v[:, 0], scale * np.sin(w * th))
    assert np.allclose(v[:, 1], scale * w * np.cos(w * th))


def test_scalar_lift_jump_unsupported():
    seg = instantiate(families.scalar_family("jump"), [1.0], 2.0)
    with pytest.raises(UnsupportedFamilyError):
        scalar_lift(seg, 2)


def test_family_from_table_scales_with_parameter():
    tau = 2.0
    base = instantiate(families.scalar_family("linear-increasing"), [1.0], tau)
    spec = families.family_from_table(*base.table(), name="custom")
    seg = instantiate(spec, [0.4], tau)
    th = np.linspace(-tau, 0.0, 21)
    assert np.allclose(seg.eval(th), 0.4 * base.eval(th), atol=1e-9)


def test_spec_validation():
    with pytest.raises(ValueError):
        FamilySpec()  # nothing chosen
    with pytest.raises(ValueError):
        FamilySpec(kinds=("constant",), basis="trig")
    with pytest.raises(ValueError):
        families.scalar_family("wavelet")
    with pytest.raises(ValueError):
        families.basis_family("chebyshev", 2)
