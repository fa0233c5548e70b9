"""Galerkin spline solves of -u'' = f: the global solution and local projections."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps
from scipy.linalg import cho_solve_banded, cholesky_banded

from .problems import Problem1D
from .spline1d import Partition1D, SplineSpace1D, basis_eval, ders_on_elements

RESIDUAL_TOL = 1e-12


class SolverError(RuntimeError):
    """A linear solve failed to reach its residual tolerance."""


def gauss_points(space: SplineSpace1D, nq: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gauss-Legendre points and weights on every element, flattened element-major."""
    xi, wi = np.polynomial.legendre.leggauss(nq)
    bp = space.partition.breakpoints
    h = np.diff(bp)
    mid = 0.5 * (bp[:-1] + bp[1:])
    x = mid[:, None] + 0.5 * h[:, None] * xi[None, :]
    w = 0.5 * h[:, None] * wi[None, :]
    elems = np.repeat(np.arange(space.N), nq)
    return elems, x.ravel(), w.ravel()


def assemble(space: SplineSpace1D, f=None, nq: int | None = None, mass: bool = False):
    """Stiffness matrix (and mass matrix / load vector on request) on the full space.

    Uses k+2 Gauss points per element by default.  Returns ``(A, M, b)`` with
    sparse CSR matrices; M and b are None unless requested.
    """
    k = space.k
    nq = nq or k + 2
    elems, x, w = gauss_points(space, nq)
    D = ders_on_elements(space, elems, x, 1)  # (npts, 2, k+1)
    N = space.N
    D = D.reshape(N, nq, 2, k + 1)
    w = w.reshape(N, nq)
    first = space.first_active(np.arange(N))
    loc = first[:, None] + np.arange(k + 1)[None, :]
    rows = np.repeat(loc[:, :, None], k + 1, axis=2).ravel()
    cols = np.repeat(loc[:, None, :], k + 1, axis=1).ravel()

    Ke = np.einsum("eq,eqi,eqj->eij", w, D[:, :, 1, :], D[:, :, 1, :])
    A = sps.coo_matrix((Ke.ravel(), (rows, cols)), shape=(space.dim, space.dim)).tocsr()
    M = None
    if mass:
        Me = np.einsum("eq,eqi,eqj->eij", w, D[:, :, 0, :], D[:, :, 0, :])
        M = sps.coo_matrix((Me.ravel(), (rows, cols)), shape=(space.dim, space.dim)).tocsr()
    b = None
    if f is not None:
        fx = np.asarray(f(x), dtype=float).reshape(N, nq)
        be = np.einsum("eq,eq,eqi->ei", w, fx, D[:, :, 0, :])
        b = np.bincount(loc.ravel(), weights=be.ravel(), minlength=space.dim)
    return A, M, b


def _to_upper_banded(A: sps.spmatrix, bw: int) -> np.ndarray:
    A = A.tocoo()
    n = A.shape[0]
    ab = np.zeros((bw + 1, n))
    keep = A.col >= A.row
    ab[bw + A.row[keep] - A.col[keep], A.col[keep]] = A.data[keep]
    return ab


def spd_banded_solve(A: sps.spmatrix, rhs: np.ndarray, bw: int, tol: float | None = None) -> np.ndarray:
    """Solve an SPD banded system by Cholesky with one refinement step if needed.

    ``tol`` bounds the normwise backward error; default :data:`RESIDUAL_TOL`.
    """
    if tol is None:
        tol = RESIDUAL_TOL
    if A.shape[0] == 0:
        return np.zeros(0)
    A = sps.csr_matrix(A)
    ab = _to_upper_banded(A, bw)
    cb = cholesky_banded(ab, lower=False)
    x = cho_solve_banded((cb, False), rhs)
    r = rhs - A @ x
    if backward_error(A, x, rhs, r) > tol:
        x = x + cho_solve_banded((cb, False), r)
        r = rhs - A @ x
    err = backward_error(A, x, rhs, r)
    if err > tol:
        raise SolverError(f"relative residual {err:.3e} exceeds {tol:.0e}")
    return x


def backward_error(A, x, rhs, r=None) -> float:
    """Normwise relative residual ||b - Ax|| / (||A|| ||x|| + ||b||) in the infinity norm."""
    if r is None:
        r = rhs - A @ x
    anorm = abs(A).sum(axis=1).max() if A.shape[0] else 0.0
    denom = anorm * np.abs(x).max(initial=0.0) + np.abs(rhs).max(initial=0.0)
    if denom == 0.0:
        return 0.0
    return float(np.abs(r).max(initial=0.0) / denom)


@dataclass(frozen=True, eq=False)
class DiscreteSolution1D:
    space: SplineSpace1D
    coeffs: np.ndarray

    def eval(self, x, s: int = 0, side: str | None = None) -> float:
        i0, vals = basis_eval(self.space, x, s, side)
        return float(vals @ self.coeffs[i0 : i0 + self.space.k + 1])

    def eval_on_elements(self, elems, x, s: int = 0) -> np.ndarray:
        """s-th derivative of the piece living on ``elems[i]`` at ``x[i]``."""
        elems = np.atleast_1d(elems)
        x = np.broadcast_to(np.asarray(x, dtype=float), elems.shape)
        D = ders_on_elements(self.space, elems, x, s)[:, s, :]
        idx = self.space.first_active(elems)[:, None] + np.arange(self.space.k + 1)[None, :]
        return np.einsum("pi,pi->p", D, self.coeffs[idx])

    def eval_reference(self, elems, m: float, s: int = 0) -> np.ndarray:
        """Evaluate at reference coordinate m in [-1, 1] of each element in ``elems``."""
        bp = self.space.partition.breakpoints
        elems = np.atleast_1d(elems)
        x = 0.5 * (1 - m) * bp[elems] + 0.5 * (1 + m) * bp[elems + 1]
        return self.eval_on_elements(elems, x, s)


def eval_solution(sol: DiscreteSolution1D, x: float, s: int = 0, side: str | None = None) -> float:
    return sol.eval(x, s, side)


def _add_point_loads(space: SplineSpace1D, b: np.ndarray, loads) -> np.ndarray:
    a, c = space.partition.a, space.partition.b
    for x, w in loads:
        if a <= x <= c:
            i0, vals = basis_eval(space, x)
            b[i0 : i0 + space.k + 1] += w * vals
    return b


def _solve_constrained(space: SplineSpace1D, b: np.ndarray, A: sps.spmatrix, fixed: np.ndarray, values: np.ndarray) -> np.ndarray:
    n = space.dim
    free = np.setdiff1d(np.arange(n), fixed)
    c = np.zeros(n)
    c[fixed] = values
    if free.size:
        A = A.tocsr()
        rhs = b[free] - A[free][:, fixed] @ values
        c[free] = spd_banded_solve(A[free][:, free], rhs, space.k)
    return c


def solve_global(problem: Problem1D, space: SplineSpace1D) -> DiscreteSolution1D:
    """Galerkin solution in S_h^{k,mu} with homogeneous Dirichlet conditions."""
    a, b_ = problem.domain
    p = space.partition
    if abs(p.a - a) > 1e-14 or abs(p.b - b_) > 1e-14:
        raise ValueError("space is not built on the problem domain")
    A, _, b = assemble(space, problem.f)
    b = _add_point_loads(space, b, problem.point_loads)
    fixed = np.array([0, space.dim - 1])
    c = _solve_constrained(space, b, A, fixed, np.zeros(2))
    return DiscreteSolution1D(space, c)


def galerkin_residual(problem: Problem1D, sol: DiscreteSolution1D) -> float:
    """Relative residual of the interior Galerkin equations."""
    A, _, b = assemble(sol.space, problem.f)
    b = _add_point_loads(sol.space, b, problem.point_loads)
    r = (A @ sol.coeffs - b)[1:-1]
    return backward_error(A[1:-1], sol.coeffs, b[1:-1], r)


@dataclass(frozen=True)
class LocalRegion1D:
    """B_d(x0): the union of elements ``elem_start .. elem_stop - 1``."""

    center: float
    elem_start: int
    elem_stop: int
    half_width: float
    sigma: float | None
    symmetric: bool

    @property
    def element_range(self) -> range:
        return range(self.elem_start, self.elem_stop)


def _is_symmetric(pts: np.ndarray, x0: float) -> bool:
    refl = np.sort(2 * x0 - pts)
    scale = max(np.max(np.abs(pts)), abs(x0), 1.0)
    return bool(np.all(np.abs(refl - np.sort(pts)) <= 1e-13 * scale))


def local_region(partition: Partition1D, x0: float, n_side: int, sigma: float | None = None) -> LocalRegion1D:
    """Region with ``n_side`` elements on each side of x0.

    x0 must be a breakpoint or an element midpoint; for a midpoint the
    element containing it is included as well.
    """
    bp = partition.breakpoints
    tol = 1e-13 * max(1.0, abs(x0))
    hit = np.nonzero(np.abs(bp - x0) <= tol)[0]
    if hit.size:
        i = int(hit[0])
        start, stop = i - n_side, i + n_side
    else:
        e = int(partition.locate(x0))
        if abs(0.5 * (bp[e] + bp[e + 1]) - x0) > tol:
            raise ValueError("x0 must be a breakpoint or an element midpoint")
        start, stop = e - n_side, e + n_side + 1
    if start < 0 or stop > partition.N:
        raise ValueError("region extends outside the domain")
    pts = bp[start : stop + 1]
    return LocalRegion1D(
        center=float(x0),
        elem_start=start,
        elem_stop=stop,
        half_width=float(max(x0 - pts[0], pts[-1] - x0)),
        sigma=sigma,
        symmetric=_is_symmetric(pts, x0),
    )


def region_for_sigma(partition: Partition1D, x0: float, sigma: float, scale: float = 1.0) -> LocalRegion1D:
    """Region of diameter about ``scale * h**sigma`` around x0."""
    h = partition.h
    d = scale * h**sigma
    n_side = max(1, int(round(0.5 * d / h)))
    return local_region(partition, x0, n_side, sigma=sigma)


def solve_local(problem: Problem1D, space: SplineSpace1D, region: LocalRegion1D, trace: str = "value") -> DiscreteSolution1D:
    """Local Galerkin projection of the exact solution onto S_h^{k,mu}(B_d).

    With ``trace="value"`` the projection matches u at the two ends of B_d and
    is Galerkin-orthogonal to every spline on B_d vanishing there.  With
    ``trace="derivatives"`` it also matches u's derivatives up to order mu at
    both ends and is tested only against splines whose traces of order <= mu
    vanish.
    """
    if problem.u_exact is None:
        raise ValueError("local projection needs the exact solution for its boundary data")
    if trace not in ("value", "derivatives"):
        raise ValueError("trace must be 'value' or 'derivatives'")
    N = space.N
    if region.elem_start <= 0 or region.elem_stop >= N:
        raise ValueError("local region touches the domain boundary")
    if region.elem_stop - region.elem_start < 2:
        raise ValueError("local region needs at least two elements")

    bp = space.partition.breakpoints[region.elem_start : region.elem_stop + 1]
    loc = SplineSpace1D(Partition1D(bp), space.k, space.mu)
    A, _, b = assemble(loc, problem.f)
    a_end, b_end = bp[0], bp[-1]
    # loads on the region ends only touch the constrained end coefficients
    b = _add_point_loads(loc, b, [(x, w) for x, w in problem.point_loads if a_end < x < b_end])
    n = loc.dim
    if trace == "value":
        fixed = np.array([0, n - 1])
        vals = np.array([problem.u_exact(a_end, 0), problem.u_exact(b_end, 0)], dtype=float)
    else:
        mu = space.mu
        if n < 2 * (mu + 1) + 1:
            raise ValueError("local region too small for derivative traces")
        Dl = ders_on_elements(loc, [0], [a_end], mu)[0]  # (mu+1, k+1)
        Dr = ders_on_elements(loc, [loc.N - 1], [b_end], mu)[0]
        ul = np.array([problem.u_exact(a_end, s) for s in range(mu + 1)], dtype=float)
        ur = np.array([problem.u_exact(b_end, s) for s in range(mu + 1)], dtype=float)
        # s-th derivative at a clamped end involves only the s+1 outermost coefficients
        cl = np.linalg.solve(Dl[:, : mu + 1], ul)
        cr = np.linalg.solve(Dr[:, -(mu + 1) :], ur)
        fixed = np.concatenate([np.arange(mu + 1), np.arange(n - mu - 1, n)])
        vals = np.concatenate([cl, cr])
    c = _solve_constrained(loc, b, A, fixed, vals)
    return DiscreteSolution1D(loc, c)
