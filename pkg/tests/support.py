"""Shared oracles for the test suite."""

import numpy as np
from scipy.interpolate import BSpline, PPoly

from superconv.problems import Problem1D
from superconv.spline1d import Partition1D, SplineSpace1D


def random_space(rng, N, k, mu, jitter=0.4):
    w = rng.uniform(1 - jitter, 1 + jitter, N)
    return SplineSpace1D(Partition1D(np.concatenate([[0.0], np.cumsum(w) / w.sum()])), k, mu)


def random_spline_coeffs(rng, space):
    c = rng.standard_normal(space.dim)
    c[0] = c[-1] = 0.0
    return c


def left_limit(pp: PPoly, x: float) -> float:
    """Value at x of the polynomial piece of ``pp`` ending at x."""
    i = np.nonzero((pp.x[:-1] < x) & (pp.x[1:] == x))[0][-1]
    return float(np.polyval(pp.c[:, i], x - pp.x[i]))


def spline_problem(space: SplineSpace1D, coeffs) -> Problem1D:
    """Problem whose exact solution is the spline with the given coefficients.

    Built on scipy's BSpline.  Where u' jumps (mu = 0) the jumps become point
    loads, so the data match -u'' in the weak sense.
    """
    c = np.asarray(coeffs, dtype=float)
    u = BSpline(space.knots, c, space.k)
    du = u.derivative()
    pp = PPoly.from_spline(du)

    def u_exact(x, s=0):
        return u(np.asarray(x, dtype=float), nu=s)

    def f(x):
        return -u(np.asarray(x, dtype=float), nu=2)

    loads = []
    if space.mu == 0:
        for x in space.partition.breakpoints[1:-1]:
            jump = float(du(x)) - left_limit(pp, x)
            loads.append((float(x), -jump))
    return Problem1D(f=f, u_exact=u_exact, name="spline", point_loads=tuple(loads))
