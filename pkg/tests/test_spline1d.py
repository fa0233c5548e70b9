import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import BSpline

from superconv.spline1d import (
    BreakpointAmbiguityError,
    Partition1D,
    SplineSpace1D,
    basis_eval,
    ders_on_elements,
    open_knot_vector,
)


def random_partition(rng, N):
    w = rng.uniform(0.5, 1.5, N)
    return Partition1D(np.concatenate([[0.0], np.cumsum(w) / w.sum()]))


def test_partition_validation():
    with pytest.raises(ValueError):
        Partition1D([0.0])
    with pytest.raises(ValueError):
        Partition1D([0.0, 0.5, 0.5, 1.0])
    p = Partition1D.uniform(4)
    with pytest.raises(ValueError):
        p.breakpoints[0] = 3.0


def test_partition_properties(tmp_path):
    p = Partition1D([0.0, 0.1, 0.4, 1.0])
    assert p.N == 3
    assert p.h == pytest.approx(0.1)
    assert p.quasi_uniformity == pytest.approx(6.0)
    r = p.refine()
    assert r.N == 6 and r.breakpoints[1] == pytest.approx(0.05)
    assert list(p.locate([0.0, 0.1, 0.39, 1.0])) == [0, 1, 1, 2]
    p.save(tmp_path / "p.txt")
    assert np.array_equal(Partition1D.load(tmp_path / "p.txt").breakpoints, p.breakpoints)


@pytest.mark.parametrize("k,mu", [(1, 0), (2, 1), (3, 0), (3, 1), (3, 2), (4, 3), (5, 2)])
def test_dimension_and_knots(k, mu):
    p = Partition1D.uniform(5)
    sp = SplineSpace1D(p, k, mu)
    assert sp.dim == 5 * (k - mu) + mu + 1
    assert len(sp.knots) == sp.dim + k + 1
    assert np.array_equal(sp.knots, open_knot_vector(p, k, mu))


def test_smoothness_range():
    with pytest.raises(ValueError):
        SplineSpace1D(Partition1D.uniform(3), 2, 2)
    with pytest.raises(ValueError):
        SplineSpace1D(Partition1D.uniform(3), 2, -1)


def test_hat_functions():
    sp = SplineSpace1D(Partition1D.uniform(2), 1, 0)
    i0, v = basis_eval(sp, 0.25)
    assert i0 == 0 and v == pytest.approx([0.5, 0.5])


@pytest.mark.parametrize("k,mu", [(2, 1), (3, 0), (3, 1), (3, 2), (4, 3), (5, 1)])
def test_against_scipy_bspline(k, mu):
    rng = np.random.default_rng(k * 10 + mu)
    sp = SplineSpace1D(random_partition(rng, 6), k, mu)
    c = rng.standard_normal(sp.dim)
    ref = BSpline(sp.knots, c, k)
    x = rng.uniform(0, 1, 50)
    elems = sp.partition.locate(x)
    D = ders_on_elements(sp, elems, x, k)
    idx = sp.first_active(elems)[:, None] + np.arange(k + 1)
    for s in range(k + 1):
        got = np.einsum("pi,pi->p", D[:, s, :], c[idx])
        assert got == pytest.approx(ref(x, nu=s), rel=1e-10, abs=1e-8)


@given(st.integers(1, 6), st.data())
@settings(max_examples=40)
def test_partition_of_unity(k, data):
    mu = data.draw(st.integers(0, k - 1))
    x = data.draw(st.floats(0, 1))
    sp = SplineSpace1D(Partition1D.uniform(7), k, mu)
    _, v = basis_eval(sp, x)
    assert v.sum() == pytest.approx(1.0, abs=1e-13)
    assert np.all(v >= -1e-14)


def test_derivative_matches_finite_difference():
    sp = SplineSpace1D(Partition1D.uniform(2), 2, 1)
    i0, d = basis_eval(sp, 0.5, 1)
    assert list(d) == pytest.approx([-2.0, 2.0, 0.0])

    def full(x, s=0):
        i0, v = basis_eval(sp, x, s)
        out = np.zeros(sp.dim)
        out[i0 : i0 + sp.k + 1] = v
        return out

    step = 1e-6
    for x in (0.2, 0.5, 0.7):
        assert full(x, 1) == pytest.approx((full(x + step) - full(x - step)) / (2 * step), abs=1e-5)


def test_breakpoint_sides():
    sp = SplineSpace1D(Partition1D.uniform(4), 2, 1)
    with pytest.raises(BreakpointAmbiguityError):
        basis_eval(sp, 0.5, 2)
    il, vl = basis_eval(sp, 0.5, 2, side="left")
    ir, vr = basis_eval(sp, 0.5, 2, side="right")
    assert il == ir - 1
    # mu = 1: first derivatives agree from both sides, second derivatives jump
    fl, fr = np.zeros(sp.dim), np.zeros(sp.dim)
    i, d = basis_eval(sp, 0.5, 1, side="left")
    fl[i : i + 3] = d
    i, d = basis_eval(sp, 0.5, 1, side="right")
    fr[i : i + 3] = d
    assert fl == pytest.approx(fr, abs=1e-12)
    sl, sr = np.zeros(sp.dim), np.zeros(sp.dim)
    sl[il : il + 3] = vl
    sr[ir : ir + 3] = vr
    assert not np.allclose(sl, sr)
    with pytest.raises(ValueError):
        basis_eval(sp, 1.5)
    with pytest.raises(ValueError):
        basis_eval(sp, 0.3, 3)


def test_right_limit_default_and_endpoint():
    sp = SplineSpace1D(Partition1D.uniform(4), 3, 1)
    i0, _ = basis_eval(sp, 0.5)
    assert i0 == sp.first_active(2)
    i0, v = basis_eval(sp, 1.0)
    assert i0 == sp.first_active(3) and v[-1] == pytest.approx(1.0)
