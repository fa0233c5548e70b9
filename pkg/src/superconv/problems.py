"""Model problems with closed-form solutions, keyed by id for the CLI."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as P


@dataclass(frozen=True)
class Problem1D:
    """-u'' = f + sum_i w_i delta(x - p_i) on (a, b) with u(a) = u(b) = 0.

    ``u_exact(x, s)`` returns the s-th derivative of the exact solution;
    ``point_loads`` holds the (p_i, w_i) pairs, empty for smooth data.
    """

    f: Callable[[np.ndarray], np.ndarray]
    u_exact: Callable[[np.ndarray, int], np.ndarray] | None = None
    domain: tuple[float, float] = (0.0, 1.0)
    name: str = ""
    point_loads: tuple[tuple[float, float], ...] = ()


@dataclass(frozen=True)
class Problem2D:
    """-Laplace u = f on the unit square with homogeneous Dirichlet data.

    ``u_exact(x, y, ax, ay)`` returns the mixed derivative d^ax/dx d^ay/dy of u.
    """

    f: Callable[[np.ndarray, np.ndarray], np.ndarray]
    u_exact: Callable[[np.ndarray, np.ndarray, int, int], np.ndarray] | None = None
    domain: tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0)
    name: str = ""


def _sin_deriv(x, s, w=math.pi):
    # d^s/dx^s sin(w x) = w^s sin(w x + s pi/2)
    return w**s * np.sin(w * np.asarray(x, dtype=float) + s * math.pi / 2)


def sin1d() -> Problem1D:
    return Problem1D(
        f=lambda x: math.pi**2 * np.sin(math.pi * np.asarray(x, dtype=float)),
        u_exact=_sin_deriv,
        name="sin1d",
    )


def zero1d() -> Problem1D:
    return Problem1D(f=lambda x: np.zeros_like(np.asarray(x, dtype=float)), u_exact=lambda x, s: np.zeros_like(np.asarray(x, dtype=float)), name="zero")


def polynomial1d(coeffs, name: str = "") -> Problem1D:
    """Problem whose solution is the polynomial with ascending monomial coefficients ``coeffs``."""
    c = np.asarray(coeffs, dtype=float)

    def u(x, s=0):
        d = P.polyder(c, s) if s else c
        return P.polyval(np.asarray(x, dtype=float), d)

    def f(x):
        return -P.polyval(np.asarray(x, dtype=float), P.polyder(c, 2))

    return Problem1D(f=f, u_exact=u, name=name or f"poly{len(c) - 1}")


def poly1d(k: int) -> Problem1D:
    """Degree-k polynomial vanishing at 0 and 1.

    x (1 - x) for k = 2, x (1 - x) (x + 0.4) (x - 0.3)^(k-3) above.
    """
    if k < 2:
        raise ValueError("poly problems need k >= 2")
    c = np.array([0.0, 1.0, -1.0])
    if k >= 3:
        c = P.polymul(c, P.polymul([0.4, 1.0], P.polypow([-0.3, 1.0], k - 3)))
    return polynomial1d(c, name=f"poly:{k}")


def sin2d() -> Problem2D:
    pi = math.pi

    def u(x, y, ax=0, ay=0):
        return _sin_deriv(x, ax) * _sin_deriv(y, ay)

    def f(x, y):
        return 2 * pi**2 * np.sin(pi * np.asarray(x, dtype=float)) * np.sin(pi * np.asarray(y, dtype=float))

    return Problem2D(f=f, u_exact=u, name="sin2d")


def poly2d(kx: int, ky: int | None = None) -> Problem2D:
    """Separable polynomial u = p(x) p(y) built from :func:`poly1d`."""
    px = poly1d(kx)
    py = poly1d(ky if ky is not None else kx)

    def u(x, y, ax=0, ay=0):
        return px.u_exact(x, ax) * py.u_exact(y, ay)

    def f(x, y):
        return px.f(x) * py.u_exact(y, 0) + px.u_exact(x, 0) * py.f(y)

    return Problem2D(f=f, u_exact=u, name=f"poly:{kx}")


def zero2d() -> Problem2D:
    def u(x, y, ax=0, ay=0):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)

    return Problem2D(f=lambda x, y: u(x, y), u_exact=u, name="zero")


def get_problem(pid: str, dim: int = 1):
    """Look up a built-in problem: ``sin1d``, ``sin2d``, ``poly:<k>`` or ``zero``."""
    if pid == "sin1d":
        return sin1d()
    if pid == "sin2d":
        return sin2d()
    if pid == "zero":
        return zero1d() if dim == 1 else zero2d()
    if pid.startswith("poly:"):
        k = int(pid.split(":", 1)[1])
        return poly1d(k) if dim == 1 else poly2d(k)
    raise KeyError(f"unknown problem id {pid!r}")
