"""Tensor-product spline Galerkin solver for -Laplace u = f on a rectangle."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import splu

from .harness1d import classify, fmt, interior_elements
from .problems import Problem2D
from .solver1d import SolverError, assemble, backward_error, gauss_points
from .spline1d import BreakpointAmbiguityError, Partition1D, SplineSpace1D, ders_on_elements

RESIDUAL_TOL = 1e-11

CSV_HEADER = ["k1", "k2", "mu1", "mu2", "a1", "a2", "x0", "y0", "N", "err", "rate", "flag"]


@dataclass(frozen=True, eq=False)
class TensorSpace2D:
    space_x: SplineSpace1D
    space_y: SplineSpace1D

    @property
    def dim(self) -> int:
        return self.space_x.dim * self.space_y.dim

    @classmethod
    def uniform(cls, N: int, k: int, mu: int, domain=(0.0, 1.0, 0.0, 1.0)) -> "TensorSpace2D":
        x0, x1, y0, y1 = domain
        return cls(
            SplineSpace1D(Partition1D.uniform(N, x0, x1), k, mu),
            SplineSpace1D(Partition1D.uniform(N, y0, y1), k, mu),
        )


def collocation_matrix(space: SplineSpace1D, x, s: int = 0, elems=None) -> np.ndarray:
    """Dense matrix of s-th basis derivatives, one row per point.

    Points are assigned to elements by right limits unless ``elems`` is given.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if elems is None:
        elems = space.partition.locate(x)
    elems = np.atleast_1d(elems)
    D = ders_on_elements(space, elems, x, s)[:, s, :]
    out = np.zeros((x.size, space.dim))
    idx = space.first_active(elems)[:, None] + np.arange(space.k + 1)[None, :]
    np.put_along_axis(out, idx, D, axis=1)
    return out


@dataclass(frozen=True, eq=False)
class DiscreteSolution2D:
    space: TensorSpace2D
    coeffs: np.ndarray  # (dim_x, dim_y)

    def eval_grid(self, x, y, ax: int = 0, ay: int = 0, ex=None, ey=None) -> np.ndarray:
        """Mixed derivative on the tensor grid x by y, shape (len(x), len(y))."""
        Bx = collocation_matrix(self.space.space_x, x, ax, ex)
        By = collocation_matrix(self.space.space_y, y, ay, ey)
        return Bx @ self.coeffs @ By.T

    def eval_points(self, x, y, ax: int = 0, ay: int = 0, ex=None, ey=None) -> np.ndarray:
        Bx = collocation_matrix(self.space.space_x, x, ax, ex)
        By = collocation_matrix(self.space.space_y, y, ay, ey)
        return np.einsum("pi,ij,pj->p", Bx, self.coeffs, By)


def _load(space: TensorSpace2D, f) -> np.ndarray:
    sx, sy = space.space_x, space.space_y
    ex, xq, wx = gauss_points(sx, sx.k + 2)
    ey, yq, wy = gauss_points(sy, sy.k + 2)
    Bx = collocation_matrix(sx, xq, 0, ex) * wx[:, None]
    By = collocation_matrix(sy, yq, 0, ey) * wy[:, None]
    F = np.asarray(f(xq[:, None], yq[None, :]), dtype=float)
    return Bx.T @ F @ By


def solve_tensor(problem: Problem2D, space: TensorSpace2D) -> DiscreteSolution2D:
    """Galerkin solution with stiffness Ax (x) My + Mx (x) Ay on the interior coefficients."""
    sx, sy = space.space_x, space.space_y
    Ax, Mx, _ = assemble(sx, mass=True)
    Ay, My, _ = assemble(sy, mass=True)
    ix = slice(1, sx.dim - 1)
    iy = slice(1, sy.dim - 1)
    Ax, Mx = Ax[ix, ix], Mx[ix, ix]
    Ay, My = Ay[iy, iy], My[iy, iy]
    K = (sps.kron(Ax, My) + sps.kron(Mx, Ay)).tocsc()
    b = _load(space, problem.f)[ix, iy].ravel()
    C = np.zeros((sx.dim, sy.dim))
    if K.shape[0]:
        lu = splu(K, permc_spec="COLAMD")
        c = lu.solve(b)
        r = b - K @ c
        if backward_error(K, c, b, r) > RESIDUAL_TOL:
            c = c + lu.solve(r)
            r = b - K @ c
        err = backward_error(K, c, b, r)
        if err > RESIDUAL_TOL:
            raise SolverError(f"relative residual {err:.3e} exceeds {RESIDUAL_TOL:.0e}")
        C[ix, iy] = c.reshape(sx.dim - 2, sy.dim - 2)
    return DiscreteSolution2D(space, C)


def _element_index(space: SplineSpace1D, x: float, order: int, side: str | None) -> int:
    bp = space.partition.breakpoints
    hit = np.nonzero(np.abs(bp - x) <= 1e-14 * max(1.0, abs(x)))[0]
    if hit.size and 0 < hit[0] < space.N:
        if order > space.mu and side is None:
            raise BreakpointAmbiguityError(f"derivative order {order} exceeds mu={space.mu} at meshpoint {x}")
        if side == "left":
            return int(hit[0]) - 1
    return int(space.partition.locate(x))


def mixed_deriv_error(sol: DiscreteSolution2D, u_exact, point, alpha=(0, 0), sides=(None, None)) -> float:
    """|d^alpha (u - u_h)(x0, y0)|.

    At a meshpoint of a direction the order in that direction may exceed the
    smoothness only when a side ('left'/'right') is given for it.
    """
    x0, y0 = point
    a1, a2 = alpha
    sx, sy = sol.space.space_x, sol.space.space_y
    if not (0 <= a1 <= sx.k and 0 <= a2 <= sy.k):
        raise ValueError("derivative orders exceed the polynomial degrees")
    ex = _element_index(sx, x0, a1, sides[0])
    ey = _element_index(sy, y0, a2, sides[1])
    uh = sol.eval_points([x0], [y0], a1, a2, [ex], [ey])[0]
    return float(abs(u_exact(x0, y0, a1, a2) - uh))


def interior_max_error_2d(problem: Problem2D, sol: DiscreteSolution2D, ref=(0.0, 0.0), alpha=(0, 0), interior=(0.1, 0.9)) -> float:
    """Max over elements inside interior^2 of the error at reference point ``ref`` of each element.

    Each element uses its own polynomial piece; with ref = (-1, -1) this
    samples every interior vertex.
    """
    sx, sy = sol.space.space_x, sol.space.space_y
    mx, my = ref
    ex = interior_elements(sx.partition, interior)
    ey = interior_elements(sy.partition, interior)
    bx, by = sx.partition.breakpoints, sy.partition.breakpoints
    x = 0.5 * (1 - mx) * bx[ex] + 0.5 * (1 + mx) * bx[ex + 1]
    y = 0.5 * (1 - my) * by[ey] + 0.5 * (1 + my) * by[ey + 1]
    uh = sol.eval_grid(x, y, alpha[0], alpha[1], ex, ey)
    u = problem.u_exact(x[:, None], y[None, :], alpha[0], alpha[1])
    return float(np.max(np.abs(u - uh)))


@dataclass(frozen=True)
class TensorRateRecord:
    k1: int
    k2: int
    mu1: int
    mu2: int
    a1: int
    a2: int
    x0: float
    y0: float
    N: int
    err: float
    rate: float
    flag: str

    def csv_row(self) -> list[str]:
        return [str(self.k1), str(self.k2), str(self.mu1), str(self.mu2), str(self.a1), str(self.a2),
                fmt(self.x0), fmt(self.y0), str(self.N), fmt(self.err), fmt(self.rate), self.flag]


def tensor_rate_study(problem: Problem2D, k: int, mu: int, N_list, refs, alpha=(0, 0), interior=(0.1, 0.9)) -> list[TensorRateRecord]:
    """Interior max errors at reference points across a doubling ladder.

    The first level of each probe carries rate NaN and flag ``base``.
    """
    sols = [solve_tensor(problem, TensorSpace2D.uniform(N, k, mu, problem.domain)) for N in N_list]
    ideal = k + 1 - max(alpha)
    out = []
    for mx, my in refs:
        prev = None
        for N, sol in zip(N_list, sols):
            err = interior_max_error_2d(problem, sol, (mx, my), alpha, interior)
            if prev is None:
                rate, flag = math.nan, "base"
            else:
                rate = math.log(prev[1] / err) / math.log(N / prev[0]) if err > 0 and prev[1] > 0 else math.nan
                flag = classify(rate, ideal, prev[1], err)
            out.append(TensorRateRecord(k, k, mu, mu, alpha[0], alpha[1], float(mx), float(my), int(N), err, rate, flag))
            prev = (N, err)
    return out


def tensor_records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.csv_row())
    return buf.getvalue()
