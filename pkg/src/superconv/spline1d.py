"""Partitions, clamped knot vectors and B-spline basis evaluation for S_h^{k,mu}."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class BreakpointAmbiguityError(ValueError):
    """Derivative above the smoothness order requested at a breakpoint without a side."""


@dataclass(frozen=True, eq=False)
class Partition1D:
    breakpoints: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2:
            raise ValueError("a partition needs at least two breakpoints")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        bp.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)

    @classmethod
    def uniform(cls, n: int, a: float = 0.0, b: float = 1.0) -> "Partition1D":
        return cls(np.linspace(a, b, n + 1))

    @property
    def N(self) -> int:
        return self.breakpoints.size - 1

    @property
    def a(self) -> float:
        return float(self.breakpoints[0])

    @property
    def b(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @property
    def h(self) -> float:
        return float(self.widths.min())

    @property
    def quasi_uniformity(self) -> float:
        w = self.widths
        return float(w.max() / w.min())

    def refine(self) -> "Partition1D":
        """Bisect every element."""
        bp = self.breakpoints
        mids = 0.5 * (bp[:-1] + bp[1:])
        out = np.empty(2 * bp.size - 1)
        out[0::2] = bp
        out[1::2] = mids
        return Partition1D(out)

    def locate(self, x: np.ndarray | float) -> np.ndarray:
        """Index of the element containing x, using right limits except at b."""
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        return np.clip(idx, 0, self.N - 1)

    def save(self, path: str | Path) -> None:
        Path(path).write_text("".join(f"{x:.17g}\n" for x in self.breakpoints))

    @classmethod
    def load(cls, path: str | Path) -> "Partition1D":
        vals = [float(line) for line in Path(path).read_text().split() if line.strip()]
        return cls(np.array(vals))


def open_knot_vector(partition: Partition1D, k: int, mu: int) -> np.ndarray:
    bp = partition.breakpoints
    interior = np.repeat(bp[1:-1], k - mu)
    return np.concatenate([np.full(k + 1, bp[0]), interior, np.full(k + 1, bp[-1])])


@dataclass(frozen=True, eq=False)
class SplineSpace1D:
    """Degree-k splines with C^mu continuity at interior breakpoints."""

    partition: Partition1D
    k: int
    mu: int
    knots: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("degree must be at least 1")
        if not 0 <= self.mu <= self.k - 1:
            raise ValueError(f"smoothness mu={self.mu} outside [0, {self.k - 1}]")
        kn = open_knot_vector(self.partition, self.k, self.mu)
        kn.setflags(write=False)
        object.__setattr__(self, "knots", kn)

    @property
    def dim(self) -> int:
        return self.partition.N * (self.k - self.mu) + self.mu + 1

    @property
    def N(self) -> int:
        return self.partition.N

    def first_active(self, elem):
        return elem * (self.k - self.mu)

    def span(self, elem):
        return self.k + np.asarray(elem) * (self.k - self.mu)


def build_space(partition: Partition1D, k: int, mu: int) -> SplineSpace1D:
    return SplineSpace1D(partition, k, mu)


def ders_on_elements(space: SplineSpace1D, elems, x, nders: int) -> np.ndarray:
    """Derivatives 0..nders of the k+1 active B-splines, vectorized over points.

    ``elems[i]`` is the element whose polynomial piece is evaluated at
    ``x[i]``; x may lie on the element's closed boundary, which gives
    one-sided values.  Returns shape (npts, nders+1, k+1).
    """
    k = space.k
    U = space.knots
    x = np.atleast_1d(np.asarray(x, dtype=float))
    span = space.span(np.atleast_1d(elems))
    npts = x.size
    nd = min(nders, k)

    ndu = np.zeros((npts, k + 1, k + 1))
    ndu[:, 0, 0] = 1.0
    left = np.zeros((npts, k + 1))
    right = np.zeros((npts, k + 1))
    for j in range(1, k + 1):
        left[:, j] = x - U[span + 1 - j]
        right[:, j] = U[span + j] - x
        saved = np.zeros(npts)
        for r in range(j):
            ndu[:, j, r] = right[:, r + 1] + left[:, j - r]
            temp = ndu[:, r, j - 1] / ndu[:, j, r]
            ndu[:, r, j] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        ndu[:, j, j] = saved

    ders = np.zeros((npts, nders + 1, k + 1))
    ders[:, 0, :] = ndu[:, :, k]
    for r in range(k + 1):
        s1, s2 = 0, 1
        a = np.zeros((npts, 2, k + 1))
        a[:, 0, 0] = 1.0
        for kk in range(1, nd + 1):
            d = np.zeros(npts)
            rk = r - kk
            pk = k - kk
            if r >= kk:
                a[:, s2, 0] = a[:, s1, 0] / ndu[:, pk + 1, rk]
                d = a[:, s2, 0] * ndu[:, rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = kk - 1 if r - 1 <= pk else k - r
            for j in range(j1, j2 + 1):
                a[:, s2, j] = (a[:, s1, j] - a[:, s1, j - 1]) / ndu[:, pk + 1, rk + j]
                d = d + a[:, s2, j] * ndu[:, rk + j, pk]
            if r <= pk:
                a[:, s2, kk] = -a[:, s1, kk - 1] / ndu[:, pk + 1, r]
                d = d + a[:, s2, kk] * ndu[:, r, pk]
            ders[:, kk, r] = d
            s1, s2 = s2, s1
    fac = float(k)
    for kk in range(1, nd + 1):
        ders[:, kk, :] *= fac
        fac *= k - kk
    return ders


def _element_for_point(space: SplineSpace1D, x: float, s: int, side: str | None) -> int:
    bp = space.partition.breakpoints
    if not bp[0] - 1e-14 <= x <= bp[-1] + 1e-14:
        raise ValueError(f"x={x} outside [{bp[0]}, {bp[-1]}]")
    N = space.N
    hit = np.nonzero(np.abs(bp - x) <= 1e-14 * max(1.0, abs(x)))[0]
    if hit.size and 0 < hit[0] < N:
        i = int(hit[0])
        if side is None:
            if s > space.mu:
                raise BreakpointAmbiguityError(
                    f"derivative order {s} > mu={space.mu} at breakpoint {x}: pass side='left' or 'right'"
                )
            return i
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        return i - 1 if side == "left" else i
    return int(space.partition.locate(x))


def basis_eval(space: SplineSpace1D, x: float, s: int = 0, side: str | None = None) -> tuple[int, np.ndarray]:
    """First active basis index and the s-th derivatives of the k+1 active B-splines at x.

    Breakpoints default to the right limit (left limit at b); a side is
    mandatory there when s exceeds the smoothness order.
    """
    if not 0 <= s <= space.k:
        raise ValueError(f"derivative order s={s} outside [0, {space.k}]")
    e = _element_for_point(space, float(x), s, side)
    vals = ders_on_elements(space, [e], [x], s)[0, s]
    return int(space.first_active(e)), vals
