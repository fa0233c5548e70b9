"""Exact Legendre-series algebra and the superconvergence point tables.

Polynomials live in the Legendre basis on [-1, 1] with :class:`fractions.Fraction`
coefficients.  The transform operator

    F(L_1) = L_2 / 3,    F(L_j) = (L_{j+1} - L_{j-1}) / (2j + 1)  (j >= 2)

is applied exactly; floats only appear once roots are requested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

MAX_ITERATES = 32

# bisection grid spacing and Newton stopping tolerance
_GRID_STEP = 1e-3
_NEWTON_TOL = 1e-12
_NEWTON_MAXITER = 100


class RootFindingError(RuntimeError):
    """Root refinement did not converge."""


def _trim(coeffs: Iterable) -> tuple[Fraction, ...]:
    out = [Fraction(c) for c in coeffs]
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


@dataclass(frozen=True)
class LegendreCoeffs:
    """Polynomial sum_j coeffs[j] * L_j(x) with exact rational coefficients.

    Trailing zeros are stripped on construction, so the empty tuple is the
    zero polynomial and ``degree`` is -1 for it.
    """

    coeffs: tuple[Fraction, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _trim(self.coeffs))

    @classmethod
    def basis(cls, j: int, scale=1) -> "LegendreCoeffs":
        c = [Fraction(0)] * (j + 1)
        c[j] = Fraction(scale)
        return cls(tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __getitem__(self, j: int) -> Fraction:
        return self.coeffs[j] if 0 <= j < len(self.coeffs) else Fraction(0)

    def __add__(self, other: "LegendreCoeffs") -> "LegendreCoeffs":
        n = max(len(self.coeffs), len(other.coeffs))
        return LegendreCoeffs(tuple(self[j] + other[j] for j in range(n)))

    def __sub__(self, other: "LegendreCoeffs") -> "LegendreCoeffs":
        n = max(len(self.coeffs), len(other.coeffs))
        return LegendreCoeffs(tuple(self[j] - other[j] for j in range(n)))

    def __mul__(self, scalar) -> "LegendreCoeffs":
        s = Fraction(scalar)
        return LegendreCoeffs(tuple(s * c for c in self.coeffs))

    __rmul__ = __mul__

    def __neg__(self) -> "LegendreCoeffs":
        return self * -1

    def derivative(self) -> "LegendreCoeffs":
        """Exact derivative, using L'_{j+1} - L'_{j-1} = (2j+1) L_j."""
        n = self.degree
        if n <= 0:
            return LegendreCoeffs()
        out = [Fraction(0)] * n
        # L'_n = sum over j = n-1, n-3, ... >= 0 of (2j+1) L_j
        for deg in range(1, n + 1):
            c = self[deg]
            if c == 0:
                continue
            for j in range(deg - 1, -1, -2):
                out[j] += c * (2 * j + 1)
        return LegendreCoeffs(tuple(out))

    def normalized(self) -> "LegendreCoeffs":
        """Rescale so the leading coefficient is 1."""
        if self.is_zero():
            raise ValueError("cannot normalize the zero polynomial")
        return self * (1 / self.coeffs[-1])

    def __call__(self, x: float, s: int = 0) -> float:
        return sum(float(c) * legendre_eval(j, s, x) for j, c in enumerate(self.coeffs) if c)

    def as_floats(self) -> list[float]:
        return [float(c) for c in self.coeffs]


def legendre_eval(j: int, s: int, x: float) -> float:
    """Return the s-th derivative of the Legendre polynomial L_j at x.

    Uses the three-term recurrence for the values and its s-fold
    differentiated form

        (n+1) P^{(s)}_{n+1} = (2n+1) (x P^{(s)}_n + s P^{(s-1)}_n) - n P^{(s)}_{n-1}.
    """
    if j < 0 or s < 0:
        raise ValueError("j and s must be nonnegative")
    if s > j:
        return 0.0
    x = float(x)
    # rows[r][n] = P_n^{(r)}(x); only the last two n are kept per row
    prev = [0.0] * (s + 1)  # P_{n-1}^{(r)}
    cur = [1.0] + [0.0] * s  # P_0^{(r)}
    for n in range(j):
        nxt = [0.0] * (s + 1)
        for r in range(s + 1):
            lower = cur[r - 1] if r else 0.0
            nxt[r] = ((2 * n + 1) * (x * cur[r] + r * lower) - n * prev[r]) / (n + 1)
        prev, cur = cur, nxt
    return cur[s]


def f_apply(p: LegendreCoeffs) -> LegendreCoeffs:
    """Apply the transform operator F to a Legendre series without constant term."""
    if p[0] != 0:
        raise ValueError("F is undefined on constants: the L_0 coefficient must vanish")
    n = p.degree
    out = [Fraction(0)] * (n + 2)
    for j in range(1, n + 1):
        c = p[j]
        if c == 0:
            continue
        if j == 1:
            out[2] += c / 3
        else:
            w = c / (2 * j + 1)
            out[j + 1] += w
            out[j - 1] -= w
    return LegendreCoeffs(tuple(out))


@lru_cache(maxsize=None)
def f_power_L1(m: int) -> LegendreCoeffs:
    """F applied m times to L_1; a polynomial of degree m + 1."""
    if m < 0:
        raise ValueError("iteration count must be nonnegative")
    if m > MAX_ITERATES:
        raise ValueError(f"iteration count {m} exceeds the supported cap {MAX_ITERATES}")
    p = LegendreCoeffs.basis(1)
    for _ in range(m):
        p = f_apply(p)
    return p


# ---------------------------------------------------------------------------
# root finding


def _to_monomial(p: LegendreCoeffs) -> list[Fraction]:
    """Exact monomial coefficients (ascending) of a Legendre series."""
    n = p.degree
    mono = [Fraction(0)] * (n + 1)
    p_prev, p_cur = [Fraction(1)], [Fraction(0), Fraction(1)]
    basis = [p_prev, p_cur]
    for k in range(1, n):
        nxt = [Fraction(0)] * (k + 2)
        for i, c in enumerate(p_cur):
            nxt[i + 1] += Fraction(2 * k + 1, k + 1) * c
        for i, c in enumerate(p_prev):
            nxt[i] -= Fraction(k, k + 1) * c
        basis.append(nxt)
        p_prev, p_cur = p_cur, nxt
    for j, c in enumerate(p.coeffs):
        if c:
            for i, b in enumerate(basis[j]):
                mono[i] += c * b
    return mono


def _deflate(mono: list[Fraction], divisor: list[Fraction]) -> list[Fraction]:
    """Exact polynomial division (ascending coefficients); the remainder must vanish."""
    num = list(mono)
    dd = len(divisor) - 1
    q = [Fraction(0)] * (len(num) - dd)
    for i in range(len(q) - 1, -1, -1):
        c = num[i + dd] / divisor[-1]
        q[i] = c
        for k, d in enumerate(divisor):
            num[i + k] -= c * d
    if any(num[:dd]):
        raise ArithmeticError("divisor does not divide the polynomial exactly")
    return q


def _horner(coeffs: Sequence[float], x: float) -> tuple[float, float]:
    val = 0.0
    der = 0.0
    for c in reversed(coeffs):
        der = der * x + val
        val = val * x + c
    return val, der


def _nonneg_roots(coeffs: list[float], lo: float, hi: float) -> list[float]:
    """Sign-change bisection on a fine grid over [lo, hi], then Newton polishing."""
    npts = max(2, int(math.ceil((hi - lo) / _GRID_STEP)) + 1)
    grid = [lo + (hi - lo) * i / (npts - 1) for i in range(npts)]
    vals = [_horner(coeffs, x)[0] for x in grid]
    scale = max(abs(c) for c in coeffs) or 1.0
    roots = []
    for i in range(npts - 1):
        a, b = grid[i], grid[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0:
            roots.append(a)
            continue
        if fa * fb > 0:
            continue
        for _ in range(200):
            mid = 0.5 * (a + b)
            fm = _horner(coeffs, mid)[0]
            if fm == 0.0 or b - a < 1e-10:
                break
            if fa * fm < 0:
                b, fb = mid, fm
            else:
                a, fa = mid, fm
        x = 0.5 * (a + b)
        for it in range(_NEWTON_MAXITER):
            fx, dfx = _horner(coeffs, x)
            if dfx == 0.0:
                break
            step = fx / dfx
            x -= step
            if abs(step) < _NEWTON_TOL * 1e-2:
                break
        else:
            raise RootFindingError(f"Newton polishing did not converge near {x}")
        if abs(_horner(coeffs, x)[0]) > 1e-9 * scale:
            raise RootFindingError(f"refined root {x} has large residual")
        roots.append(x)
    if vals[-1] == 0.0:
        roots.append(grid[-1])
    out: list[float] = []
    for r in sorted(roots):
        if not out or abs(r - out[-1]) > 1e-9:
            out.append(r)
    return out


def roots_in_interval(p: LegendreCoeffs) -> list[float]:
    """All distinct real roots of p in [-1, 1], sorted.

    Factors x and x^2 - 1 are deflated exactly when they divide p.  The rest
    is searched on [0, 1] only when p has definite parity, and mirrored, so
    symmetric inputs give exactly symmetric output.
    """
    if p.is_zero():
        raise ValueError("the zero polynomial has no isolated roots")
    mono = _to_monomial(p)
    even = all(c == 0 for c in mono[1::2])
    odd = all(c == 0 for c in mono[0::2])

    known: set[float] = set()
    # exact deflation of x
    while len(mono) > 1 and mono[0] == 0:
        mono = mono[1:]
        known.add(0.0)
    # exact deflation of (x - 1)(x + 1)
    unit = [Fraction(-1), Fraction(0), Fraction(1)]
    while len(mono) > 2:
        try:
            mono = _deflate(mono, unit)
        except ArithmeticError:
            break
        known.update((-1.0, 1.0))
    # remaining single endpoint factors (possible without parity)
    for r in (1, -1):
        while len(mono) > 1 and sum(c * r**i for i, c in enumerate(mono)) == 0:
            mono = _deflate(mono, [Fraction(-r), Fraction(1)])
            known.add(float(r))

    fl = [float(c) for c in mono]
    if len(fl) > 1:
        if even or odd:
            pos = _nonneg_roots(fl, 0.0, 1.0)
            found = set(pos) | {-r for r in pos}
        else:
            found = set(_nonneg_roots(fl, -1.0, 1.0))
        known |= found
    out: list[float] = []
    for r in sorted(known):
        if not out or abs(r - out[-1]) > 1e-9:
            out.append(r)
    return out


@dataclass(frozen=True)
class SuperconvergencePointSet:
    """Reference-element superconvergence points of e^{(s)} for degree k."""

    k: int
    s: int
    points: tuple[float, ...]
    a_value: float | None = None

    @property
    def parity_even(self) -> bool:
        return (self.k - self.s) % 2 == 0


def superconv_points(k: int, s: int, assume_mean_cancellation: bool = False) -> SuperconvergencePointSet:
    """Superconvergence points of the s-th derivative error of smoothest degree-k splines.

    These are the zeros in [-1, 1] of F^{k-s}(L_1).  For odd k the s = 0 case
    also needs the element mean of the error to be negligible, which has to
    be asserted by the caller with ``assume_mean_cancellation``.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if not 0 <= s <= k:
        raise ValueError(f"derivative order s={s} outside [0, {k}]")
    if k % 2 == 1 and s == 0 and not assume_mean_cancellation:
        raise ValueError("odd k with s=0 requires assume_mean_cancellation=True")
    m = k - s
    if m > MAX_ITERATES:
        raise ValueError(f"k - s = {m} exceeds the supported cap {MAX_ITERATES}")
    pts = tuple(roots_in_interval(f_power_L1(m)))
    a = None
    if m % 2 == 1:
        a = max(pts)
    return SuperconvergencePointSet(k=k, s=s, points=pts, a_value=a)


def predicted_superconv_exponent(k: int, s: int, sigma: float, n: int = 1) -> float:
    """Predicted pointwise convergence order at a local symmetric center.

    k + 1 - s + min(sigma, (k-1)(1 - (2k-2+n)/(2k-2) sigma)) for an
    n-dimensional mesh whose symmetric region has diameter ~ h^sigma.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if n not in (1, 2, 3):
        raise ValueError("n must be 1, 2 or 3")
    if (k - s) % 2:
        raise ValueError("k - s must be even")
    upper = (2 * k - 2) / (2 * k - 2 + n)
    if not 0 < sigma < upper:
        raise ValueError(f"sigma must lie in (0, {upper})")
    gain = min(sigma, (k - 1) * (1 - (2 * k - 2 + n) / (2 * k - 2) * sigma))
    return k + 1 - s + gain
