import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import NdBSpline

from superconv.problems import Problem2D, poly2d, sin2d, zero2d
from superconv.spline1d import BreakpointAmbiguityError
from superconv.tensor2d import (
    CSV_HEADER,
    DiscreteSolution2D,
    TensorSpace2D,
    collocation_matrix,
    interior_max_error_2d,
    mixed_deriv_error,
    solve_tensor,
    tensor_rate_study,
    tensor_records_to_csv,
)
from support import random_space


def test_eval_matches_scipy_ndbspline():
    rng = np.random.default_rng(2)
    space = TensorSpace2D(random_space(rng, 5, 3, 1), random_space(rng, 4, 2, 1))
    C = rng.standard_normal((space.space_x.dim, space.space_y.dim))
    sol = DiscreteSolution2D(space, C)
    ref = NdBSpline((space.space_x.knots, space.space_y.knots), C, (3, 2))
    x, y = rng.uniform(0, 1, 30), rng.uniform(0, 1, 30)
    for ax, ay in [(0, 0), (1, 0), (0, 1), (1, 1), (2, 2)]:
        got = sol.eval_points(x, y, ax, ay)
        want = ref(np.c_[x, y], nu=(ax, ay))
        assert got == pytest.approx(want, rel=1e-10, abs=1e-8)


def test_collocation_rows_sum_to_one():
    rng = np.random.default_rng(0)
    sp = random_space(rng, 7, 4, 2)
    B = collocation_matrix(sp, rng.uniform(0, 1, 40))
    assert B.sum(axis=1) == pytest.approx(np.ones(40), abs=1e-13)


@pytest.mark.parametrize("k", [2, 3])
def test_reproduces_tensor_polynomials(k):
    problem = poly2d(k)
    sol = solve_tensor(problem, TensorSpace2D.uniform(6, k, k - 1))
    x = np.linspace(0, 1, 23)
    err = sol.eval_grid(x, x) - problem.u_exact(x[:, None], x[None, :])
    assert np.abs(err).max() < 1e-9


def test_zero_data():
    sol = solve_tensor(zero2d(), TensorSpace2D.uniform(5, 2, 1))
    assert np.all(sol.coeffs == 0)


def test_solution_symmetric_under_swap():
    # u = sin(pi x) sin(pi y) is invariant under x <-> y and so is the Galerkin solution
    sol = solve_tensor(sin2d(), TensorSpace2D.uniform(12, 3, 2))
    assert sol.coeffs == pytest.approx(sol.coeffs.T, abs=1e-13)


def test_boundary_values_vanish():
    sol = solve_tensor(sin2d(), TensorSpace2D.uniform(8, 2, 1))
    t = np.linspace(0, 1, 11)
    assert np.abs(sol.eval_grid([0.0, 1.0], t)).max() < 1e-14
    assert np.abs(sol.eval_grid(t, [0.0, 1.0])).max() < 1e-14


def test_mixed_derivative_admissibility():
    sol = solve_tensor(sin2d(), TensorSpace2D.uniform(8, 2, 1))
    u = sin2d().u_exact
    with pytest.raises(BreakpointAmbiguityError):
        mixed_deriv_error(sol, u, (0.5, 0.3), (2, 0))
    left = mixed_deriv_error(sol, u, (0.5, 0.3), (2, 0), ("left", None))
    right = mixed_deriv_error(sol, u, (0.5, 0.3), (2, 0), ("right", None))
    assert left != right
    # order within the smoothness is fine at a meshpoint
    assert mixed_deriv_error(sol, u, (0.5, 0.5), (1, 1)) >= 0
    with pytest.raises(ValueError):
        mixed_deriv_error(sol, u, (0.3, 0.3), (3, 0))


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95))
@settings(max_examples=25, deadline=None)
def test_point_error_matches_grid_eval(x0, y0):
    sol = solve_tensor(sin2d(), TensorSpace2D.uniform(7, 2, 1))
    e = mixed_deriv_error(sol, sin2d().u_exact, (x0, y0), (0, 0))
    assert e == pytest.approx(abs(sin2d().u_exact(x0, y0, 0, 0) - sol.eval_grid([x0], [y0])[0, 0]), abs=1e-15)


def test_vertex_rate_k2():
    recs = tensor_rate_study(sin2d(), 2, 1, [16, 32, 64], [(-1.0, -1.0)])
    rates = [r.rate for r in recs[1:]]
    assert min(rates) >= 3.5
    assert recs[0].flag == "base" and math.isnan(recs[0].rate)
    assert all(r.flag == "super" for r in recs[1:])


def test_gauss_point_mixed_derivative_superconverges():
    g = 1 / math.sqrt(3)
    recs = tensor_rate_study(sin2d(), 2, 1, [16, 32], [(g, g)], alpha=(1, 1))
    assert recs[1].rate >= 2 + 0.7


def test_ordinary_point_mixed_derivative_is_normal():
    recs = tensor_rate_study(sin2d(), 2, 1, [16, 32], [(0.3, 0.3)], alpha=(1, 1))
    assert recs[1].rate <= 2 + 0.3


def test_interior_max_error_validation():
    sol = solve_tensor(sin2d(), TensorSpace2D.uniform(8, 2, 1))
    with pytest.raises(ValueError):
        interior_max_error_2d(sin2d(), sol, interior=(0.45, 0.5))


def test_csv_output():
    recs = tensor_rate_study(sin2d(), 2, 1, [8, 16], [(-1.0, -1.0), (0.0, 0.0)])
    text = tensor_records_to_csv(recs)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == CSV_HEADER
    assert len(rows) == 5
    assert float(rows[2][9]) == recs[1].err


def test_domain_scaling():
    # a non-unit rectangle still reproduces a product of quadratics vanishing on its boundary
    def u(x, y, ax=0, ay=0):
        px = [x * (2 - x), 2 - 2 * x, -2 * np.ones_like(x)][ax]
        py = [y * (1 - y), 1 - 2 * y, -2 * np.ones_like(y)][ay]
        return px * py

    problem = Problem2D(f=lambda x, y: 2 * y * (1 - y) + 2 * x * (2 - x), u_exact=u, domain=(0.0, 2.0, 0.0, 1.0))
    sol = solve_tensor(problem, TensorSpace2D.uniform(4, 2, 1, problem.domain))
    x, y = np.linspace(0, 2, 9), np.linspace(0, 1, 9)
    assert np.abs(sol.eval_grid(x, y) - u(x[:, None], y[None, :])).max() < 1e-10
