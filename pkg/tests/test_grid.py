import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tvsc.grid import (
    DualField,
    GridImage,
    LevelSet,
    boundary_edges,
    divergence,
    gradient,
    perimeter_aniso,
    tv_aniso,
    tv_iso,
)
from tvsc.oracles import coarea_tv_aniso

shapes = st.tuples(st.integers(1, 9), st.integers(1, 9))
finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def images(shape=shapes):
    return shape.flatmap(lambda s: arrays(float, s, elements=finite))


def test_rejects_bad_images():
    with pytest.raises(ValueError):
        GridImage(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        GridImage(np.zeros((2, 2)), h=0.0)
    with pytest.raises(ValueError):
        GridImage(np.zeros((0, 3)))


def test_image_is_read_only():
    img = GridImage(np.zeros((2, 3)), h=0.5)
    with pytest.raises(ValueError):
        img.values[0, 0] = 1.0
    assert (img.width, img.height) == (3, 2)
    assert img.area == pytest.approx(1.5)


def test_constant_has_zero_gradient():
    gx, gy = gradient(GridImage(np.full((4, 5), 3.7)))
    assert not gx.any() and not gy.any()


def test_single_forward_difference():
    gx, gy = gradient(GridImage([[0.0, 1.0]]))
    np.testing.assert_array_equal(gx, [[1.0, 0.0]])
    np.testing.assert_array_equal(gy, [[0.0, 0.0]])


def test_gradient_scales_with_spacing():
    gx, _ = gradient(GridImage([[0.0, 1.0, 3.0]], h=0.5))
    np.testing.assert_array_equal(gx, [[2.0, 4.0, 0.0]])


def test_zero_field_has_zero_divergence():
    assert not divergence(DualField.zeros((3, 4), 1.0)).values.any()


@settings(max_examples=60, deadline=None)
@given(shapes, st.floats(0.05, 4.0), st.integers(0, 2**31 - 1))
def test_adjointness(shape, h, seed):
    rng = np.random.default_rng(seed)
    u = GridImage(rng.normal(size=shape), h)
    px, py = rng.normal(size=shape), rng.normal(size=shape)
    px[:, -1] = 0.0
    py[-1, :] = 0.0
    gx, gy = gradient(u)
    lhs = np.sum(gx * px + gy * py)
    rhs = -np.sum(u.values * divergence(DualField(px, py, 10.0, h)).values)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, np.abs(lhs)) / min(h, 1.0)


@settings(max_examples=60, deadline=None)
@given(shapes, st.integers(0, 2**31 - 1))
def test_divergence_flux_balance(shape, seed):
    rng = np.random.default_rng(seed)
    p = DualField(rng.normal(size=shape), rng.normal(size=shape), 10.0, 0.3)
    assert abs(divergence(p).values.sum()) <= 1e-11


def test_tv_of_constant_is_zero():
    u = GridImage(np.full((5, 5), -2.0))
    assert tv_iso(u) == 0.0 and tv_aniso(u) == 0.0


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_block_tv_counts_edges(k):
    v = np.zeros((k + 4, k + 6))
    v[2 : 2 + k, 3 : 3 + k] = 1.0
    assert tv_aniso(GridImage(v)) == 4 * k
    assert perimeter_aniso(v > 0) == 4 * k


def test_tv_measured_in_continuum_units():
    v = np.zeros((8, 8))
    v[2:6, 2:6] = 1.0
    # a square of side 4h has perimeter 16h
    assert tv_aniso(GridImage(v, h=0.25)) == pytest.approx(4.0)


@settings(max_examples=80, deadline=None)
@given(st.tuples(st.integers(1, 8), st.integers(1, 8)), st.integers(0, 2**31 - 1), st.integers(1, 6))
def test_coarea_identity_on_integer_images(shape, seed, spread):
    img = np.random.default_rng(seed).integers(-spread, spread + 1, size=shape).astype(float)
    assert tv_aniso(img) == coarea_tv_aniso(img)


@settings(max_examples=80, deadline=None)
@given(images())
def test_iso_aniso_sandwich(v):
    a, i = tv_aniso(v), tv_iso(v)
    assert i <= a * (1 + 1e-12) + 1e-12
    assert a <= np.sqrt(2) * i * (1 + 1e-12) + 1e-12


@settings(max_examples=60, deadline=None)
@given(images(), st.floats(-5, 5), st.floats(-5, 5))
def test_homogeneity_and_translation(v, alpha, c):
    for tv in (tv_iso, tv_aniso):
        base = tv(v)
        assert tv(alpha * v) == pytest.approx(abs(alpha) * base, rel=1e-9, abs=1e-9)
        assert tv(v + c) == pytest.approx(base, rel=1e-9, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(images())
def test_tv_vanishes_only_on_constants(v):
    assert (tv_iso(v) == 0) == (np.ptp(v) == 0)


def test_dual_field_feasibility():
    p = DualField(np.array([[0.6]]), np.array([[0.8]]), 1.0)
    assert p.is_feasible()
    assert p.max_norm() == pytest.approx(1.0)
    q = DualField(np.array([[0.6]]), np.array([[0.8]]), 0.8, norm="aniso")
    assert q.is_feasible() and not DualField(q.x, q.y, 0.7, norm="aniso").is_feasible()
    with pytest.raises(ValueError):
        DualField(np.zeros(2), np.zeros(3), 1.0)


def test_level_set_perimeter_and_containment():
    m = np.zeros((6, 6), bool)
    m[1:4, 1:4] = True
    big = LevelSet(m, 0.5, h=0.5)
    small = np.zeros_like(m)
    small[2, 2] = True
    assert big.perimeter == boundary_edges(m) * 0.5 == 6.0
    assert big.area == pytest.approx(9 * 0.25)
    assert LevelSet(small) in big
    assert big not in LevelSet(small)
