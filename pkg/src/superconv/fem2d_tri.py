"""Triangular P2 Lagrange and cubic Hermite Poisson solvers on meshes with a point-symmetric patch."""

from __future__ import annotations

import csv
import enum
import io
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.sparse as sps
from scipy.optimize import least_squares
from scipy.sparse.linalg import LinearOperator, onenormest, splu

from .harness1d import fmt
from .problems import Problem2D
from .solver1d import SolverError, backward_error

RESIDUAL_TOL = 1e-10
COND_WARN = 1e12
DEFAULT_X0 = (0.3, 0.4)
DEFAULT_X0_PRIME = (0.7, 0.6)
RATE_HEADER = ["kind", "alpha", "probe", "Ndof_coarse", "Ndof_fine", "err_coarse", "err_fine", "rate"]


class MeshError(RuntimeError):
    """Mesh generation produced an inverted or degenerate triangle."""


class ConditioningWarning(RuntimeWarning):
    """Estimated condition number of a system matrix exceeds the warning threshold."""


class ElementKind(enum.Enum):
    LagrangeP2 = "p2"
    HermiteCubic = "hermite"

    @classmethod
    def parse(cls, tag: str) -> "ElementKind":
        for kind in cls:
            if tag in (kind.value, kind.name):
                return kind
        raise ValueError(f"unknown element kind {tag!r}")


# ---------------------------------------------------------------- quadrature

@dataclass(frozen=True)
class TriangleRule:
    """Barycentric points (n, 3) and weights summing to 1."""

    degree: int
    bary: np.ndarray
    weights: np.ndarray


def _orbit_points(kind: str, params) -> np.ndarray:
    if kind == "S3":
        return np.array([[1 / 3, 1 / 3, 1 / 3]])
    if kind == "S21":
        a = params[0]
        b = (1 - a) / 2
        return np.array([[a, b, b], [b, a, b], [b, b, a]])
    a, b = params
    c = 1 - a - b
    return np.array([[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]])


# Dunavant's symmetric rules as (orbit, position parameters, weight); polished at first use
_RULE_SEEDS = {
    5: [("S3", (), 0.225),
        ("S21", (0.059715871789770,), 0.132394152788506),
        ("S21", (0.797426985353087,), 0.125939180544827)],
    6: [("S21", (0.873821971016996,), 0.050844906370207),
        ("S21", (0.501426509658179,), 0.116786275726379),
        ("S111", (0.636502499121399, 0.310352451033785), 0.082851075618374)],
    8: [("S3", (), 0.144315607677787),
        ("S21", (0.081414823414554,), 0.095091634267285),
        ("S21", (0.658861384496480,), 0.103217370534718),
        ("S21", (0.898905543365938,), 0.032458497623198),
        ("S111", (0.008394777409958, 0.263112829634638), 0.027230314174435)],
}


def exact_bary_moment(a: int, b: int, c: int) -> float:
    """Mean of l1^a l2^b l3^c over a triangle: 2 a! b! c! / (a+b+c+2)!."""
    return 2.0 * math.factorial(a) * math.factorial(b) * math.factorial(c) / math.factorial(a + b + c + 2)


def _assemble_rule(seed, x) -> tuple[np.ndarray, np.ndarray]:
    pts, wts, i = [], [], 0
    for kind, params, _ in seed:
        n = len(params)
        P = _orbit_points(kind, x[i : i + n])
        pts.append(P)
        wts.append(np.full(len(P), x[i + n]))
        i += n + 1
    return np.vstack(pts), np.concatenate(wts)


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> TriangleRule:
    """Smallest tabulated symmetric rule exact to at least ``degree``."""
    avail = sorted(_RULE_SEEDS)
    d = next((d for d in avail if d >= degree), None)
    if d is None:
        raise ValueError(f"no rule of degree {degree}; max is {avail[-1]}")
    seed = _RULE_SEEDS[d]
    x0 = np.concatenate([np.r_[p, w] for _, p, w in seed])
    exps = [(a, b, t - a - b) for t in range(d + 1) for a in range(t + 1) for b in range(t - a + 1)]
    target = np.array([exact_bary_moment(*e) for e in exps])
    E = np.array(exps)

    def resid(x):
        P, W = _assemble_rule(seed, x)
        return (W[:, None] * np.prod(P[:, None, :] ** E[None, :, :], axis=2)).sum(axis=0) - target

    x = least_squares(resid, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15).x
    P, W = _assemble_rule(seed, x)
    P.setflags(write=False)
    W.setflags(write=False)
    return TriangleRule(d, P, W)


# ---------------------------------------------------------------- mesh

@dataclass(frozen=True)
class SymmetricPatch:
    center: tuple[float, float]
    rings: int
    center_vertex: int
    pairs: np.ndarray  # (m, 2) vertex indices mapped onto each other by reflection
    triangles: np.ndarray  # indices of patch triangles


@dataclass(frozen=True, eq=False)
class TriMesh2D:
    vertices: np.ndarray  # (nv, 2)
    triangles: np.ndarray  # (nt, 3), counterclockwise
    boundary: np.ndarray  # (nv,) bool
    patch: SymmetricPatch
    probe_vertex: int  # the comparison vertex x0'
    perturb_seed: int
    rho: float
    displaced: np.ndarray = field(repr=False, default=None)  # (nv,) bool

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def signed_areas(self) -> np.ndarray:
        P = self.vertices[self.triangles]
        d1 = P[:, 1] - P[:, 0]
        d2 = P[:, 2] - P[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def save(self, path: str | Path) -> None:
        patch_flag = np.zeros(self.n_vertices, dtype=int)
        patch_flag[self.patch.pairs.ravel()] = 1
        lines = ["vertices"]
        for i, (x, y) in enumerate(self.vertices):
            lines.append(f"{i} {fmt(x)} {fmt(y)} {int(self.boundary[i])} {patch_flag[i]}")
        lines.append("triangles")
        lines.extend(f"{a} {b} {c}" for a, b, c in self.triangles)
        cx, cy = self.patch.center
        px, py = self.vertices[self.probe_vertex]
        lines += ["meta", f"seed {self.perturb_seed}", f"rho {fmt(self.rho)}", f"rings {self.patch.rings}",
                  f"x0 {fmt(cx)} {fmt(cy)}", f"x0prime {fmt(px)} {fmt(py)}"]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "TriMesh2D":
        section, verts, bflag, pflag, tris, meta = None, [], [], [], [], {}
        for line in Path(path).read_text().splitlines():
            tok = line.split()
            if not tok:
                continue
            if tok[0] in ("vertices", "triangles", "meta") and len(tok) == 1:
                section = tok[0]
            elif section == "vertices":
                verts.append((float(tok[1]), float(tok[2])))
                bflag.append(tok[3] == "1")
                pflag.append(tok[4] == "1")
            elif section == "triangles":
                tris.append(tuple(int(t) for t in tok))
            elif section == "meta":
                meta[tok[0]] = tok[1:]
            else:
                raise ValueError(f"unexpected line {line!r}")
        V = np.array(verts)
        T = np.array(tris, dtype=np.int64)
        x0 = np.array([float(v) for v in meta["x0"]])
        x0p = np.array([float(v) for v in meta["x0prime"]])
        c = int(np.argmin(np.abs(V - x0).sum(axis=1)))
        probe = int(np.argmin(np.abs(V - x0p).sum(axis=1)))
        pairs, ptris = _reflection_pairs(V, T, np.array(pflag), x0)
        patch = SymmetricPatch((float(x0[0]), float(x0[1])), int(meta["rings"][0]), c, pairs, ptris)
        return cls(V, T, np.array(bflag), patch, probe, int(meta["seed"][0]), float(meta["rho"][0]))


def _reflection_pairs(V, T, in_patch, center):
    idx = np.nonzero(in_patch)[0]
    refl = 2 * np.asarray(center) - V[idx]
    match = [idx[np.argmin(np.abs(V[idx] - r).sum(axis=1))] for r in refl]
    pairs = np.column_stack([idx, match])
    ptris = np.nonzero(in_patch[T].all(axis=1))[0]
    return pairs, ptris


def grid_lines(n: int, anchor: float, other: float, rings: int) -> tuple[np.ndarray, int, int]:
    """Grid coordinates on [0, 1] with spacing near 1/n that contain ``anchor + j/n`` for |j| <= rings and ``other``.

    Returns the lines and the indices of ``anchor`` and ``other``.  When n
    puts both values on the uniform grid the lines are exactly uniform.
    """
    h = 1.0 / n
    patch = [anchor + j * h for j in range(-rings, rings + 1)]
    if patch[0] <= h / 2 or patch[-1] >= 1 - h / 2:
        raise ValueError("symmetric patch does not fit inside the domain")
    if abs(other - anchor) <= (rings + 0.5) * h:
        raise ValueError("comparison point lies inside the symmetric patch")
    anchors = sorted([0.0, 1.0, other] + patch)
    lines = [0.0]
    for a, b in zip(anchors, anchors[1:]):
        m = max(1, int(round((b - a) / h)))
        lines.extend(a + (b - a) * np.arange(1, m) / m)
        lines.append(b)
    lines = np.array(lines)
    ia = int(np.argmin(np.abs(lines - anchor)))
    io_ = int(np.argmin(np.abs(lines - other)))
    lines[ia] = anchor
    lines[io_] = other
    return lines, ia, io_


def build_symmetric_mesh(n: int, rings: int = 2, rho: float = 0.25, seed: int = 0,
                         x0=DEFAULT_X0, x0_prime=DEFAULT_X0_PRIME, max_retries: int = 3) -> TriMesh2D:
    """Structured triangulation of the unit square with a point-symmetric patch around x0.

    Every square gets the same diagonal, which makes the lattice point
    symmetric about each vertex.  Vertices within ``rings`` index rings of
    x0 stay on the lattice; other interior vertices except x0' move by a
    seeded uniform offset of up to ``rho`` times the adjacent line spacing
    in each coordinate.
    """
    if rings < 2:
        raise ValueError("rings must be at least 2")
    if not 0 <= rho < 0.3:
        raise ValueError("rho must lie in [0, 0.3)")
    for p in (x0, x0_prime):
        if not (0 < p[0] < 1 and 0 < p[1] < 1):
            raise ValueError("probe points must be interior")
    xs, ix0, ix1 = grid_lines(n, x0[0], x0_prime[0], rings)
    ys, iy0, iy1 = grid_lines(n, x0[1], x0_prime[1], rings)
    nx, ny = len(xs), len(ys)
    I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    I, J = I.ravel(), J.ravel()
    vid = lambda i, j: i * ny + j  # noqa: E731
    base = np.column_stack([xs[I], ys[J]])
    boundary = (I == 0) | (I == nx - 1) | (J == 0) | (J == ny - 1)
    in_patch = (np.abs(I - ix0) <= rings) & (np.abs(J - iy0) <= rings)
    movable = ~boundary & ~in_patch
    movable[vid(ix1, iy1)] = False

    si, sj = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
    si, sj = si.ravel(), sj.ravel()
    a, b, c, d = vid(si, sj), vid(si + 1, sj), vid(si + 1, sj + 1), vid(si, sj + 1)
    T = np.empty((2 * a.size, 3), dtype=np.int64)
    T[0::2] = np.column_stack([a, b, c])
    T[1::2] = np.column_stack([a, c, d])

    gx = np.diff(xs)
    gy = np.diff(ys)
    gap = np.column_stack([
        np.minimum(gx[np.clip(I - 1, 0, nx - 2)], gx[np.clip(I, 0, nx - 2)]),
        np.minimum(gy[np.clip(J - 1, 0, ny - 2)], gy[np.clip(J, 0, ny - 2)]),
    ])
    offsets = np.random.default_rng(seed).uniform(-1.0, 1.0, size=(nx * ny, 2))

    r = rho
    for _ in range(max_retries + 1):
        V = base + np.where(movable[:, None], r * gap * offsets, 0.0)
        pairs, ptris = _reflection_pairs(V, T, in_patch, x0)
        mesh = TriMesh2D(V, T, boundary, SymmetricPatch((float(x0[0]), float(x0[1])), rings, vid(ix0, iy0), pairs, ptris),
                         vid(ix1, iy1), seed, r, movable & (r > 0))
        if mesh.signed_areas().min() > 1e-14:
            return mesh
        r /= 2
    raise MeshError(f"perturbation inverts triangles even at rho={r * 2}")


def patch_symmetry_defect(mesh: TriMesh2D) -> float:
    """Max relative distance between reflected patch vertices and their partners."""
    c = np.asarray(mesh.patch.center)
    V = mesh.vertices
    p = mesh.patch.pairs
    return float(np.abs(2 * c - V[p[:, 0]] - V[p[:, 1]]).max() / max(1.0, np.abs(c).max()))


# ---------------------------------------------------------------- elements

def _edges(T: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unique edges (sorted vertex pairs) and per-triangle edge ids, edge e opposite vertex e."""
    loc = np.stack([T[:, [1, 2]], T[:, [2, 0]], T[:, [0, 1]]], axis=1)
    key = np.sort(loc, axis=2).reshape(-1, 2)
    edges, inv = np.unique(key, axis=0, return_inverse=True)
    return edges, inv.reshape(-1, 3)


def _affine(mesh: TriMesh2D):
    P = mesh.vertices[mesh.triangles]
    B = np.stack([P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]], axis=2)  # columns are edge vectors
    det = B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0]
    return P, B, det


@dataclass(frozen=True, eq=False)
class TriSolution:
    mesh: TriMesh2D
    kind: ElementKind
    coeffs: np.ndarray
    n_dof: int
    edges: np.ndarray | None = None  # P2 only


def _dof_layout(mesh: TriMesh2D, kind: ElementKind):
    T = mesh.triangles
    nv = mesh.n_vertices
    if kind is ElementKind.LagrangeP2:
        edges, te = _edges(T)
        loc = np.hstack([T, nv + te])
        n = nv + len(edges)
        bnd_edge = np.bincount(te.ravel(), minlength=len(edges)) == 1
        fixed = np.concatenate([np.nonzero(mesh.boundary)[0], nv + np.nonzero(bnd_edge)[0]])
        return loc, n, fixed, edges
    loc = np.hstack([3 * T[:, [0]] + np.arange(3), 3 * T[:, [1]] + np.arange(3), 3 * T[:, [2]] + np.arange(3),
                     3 * nv + np.arange(len(T))[:, None]])
    n = 3 * nv + len(T)
    V = mesh.vertices
    bnd = np.nonzero(mesh.boundary)[0]
    on_x = np.isclose(V[bnd, 0], 0.0) | np.isclose(V[bnd, 0], 1.0)  # vertical sides: d/dy is tangential
    on_y = np.isclose(V[bnd, 1], 0.0) | np.isclose(V[bnd, 1], 1.0)
    fixed = np.concatenate([3 * bnd, 3 * bnd[on_y] + 1, 3 * bnd[on_x] + 2])
    return loc, n, np.unique(fixed), None


def _p2_basis(lam: np.ndarray, B: np.ndarray):
    """Values (nq, 6) and physical gradients (nt, nq, 6, 2) of the P2 basis."""
    l1, l2, l3 = lam[:, 0], lam[:, 1], lam[:, 2]
    vals = np.column_stack([l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), l3 * (2 * l3 - 1), 4 * l2 * l3, 4 * l3 * l1, 4 * l1 * l2])
    # derivatives with respect to barycentric (l1, l2, l3)
    z = np.zeros_like(l1)
    dl = np.stack([
        np.column_stack([4 * l1 - 1, z, z]),
        np.column_stack([z, 4 * l2 - 1, z]),
        np.column_stack([z, z, 4 * l3 - 1]),
        np.column_stack([z, 4 * l3, 4 * l2]),
        np.column_stack([4 * l3, z, 4 * l1]),
        np.column_stack([4 * l2, 4 * l1, z]),
    ], axis=1)  # (nq, 6, 3)
    # reference coords (r, s) with l1 = 1 - r - s, l2 = r, l3 = s
    dref = np.stack([dl[..., 1] - dl[..., 0], dl[..., 2] - dl[..., 0]], axis=-1)  # (nq, 6, 2)
    Binv_T = np.linalg.inv(B).transpose(0, 2, 1)  # (nt, 2, 2)
    grads = np.einsum("tij,qbj->tqbi", Binv_T, dref)
    return vals, grads


_MONO = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)]


def _mono_table(xi, eta):
    """Cubic monomials and their first derivatives: arrays (..., 10)."""
    xi = np.asarray(xi)
    eta = np.asarray(eta)
    v, dx, dy = [], [], []
    for p, q in _MONO:
        v.append(xi**p * eta**q)
        dx.append(p * xi ** max(p - 1, 0) * eta**q if p else np.zeros_like(xi))
        dy.append(q * xi**p * eta ** max(q - 1, 0) if q else np.zeros_like(xi))
    return np.stack(v, -1), np.stack(dx, -1), np.stack(dy, -1)


def _hermite_frames(mesh: TriMesh2D):
    """Per-triangle centroid, length scale and monomial-to-basis matrix (nt, 10, 10).

    Local coordinates are (x - centroid) / hT.  Column b of the matrix holds
    the monomial coefficients of the basis function dual to local DOF b.
    """
    P = mesh.vertices[mesh.triangles]
    cen = P.mean(axis=1)
    hT = np.linalg.norm(P - np.roll(P, 1, axis=1), axis=2).max(axis=1)
    loc = (P - cen[:, None, :]) / hT[:, None, None]
    v, dx, dy = _mono_table(loc[..., 0], loc[..., 1])  # (nt, 3, 10)
    rows = np.concatenate([np.stack([v, dx, dy], axis=2).reshape(len(P), 9, 10),
                           _mono_table(np.zeros(len(P)), np.zeros(len(P)))[0][:, None, :]], axis=1)
    C = np.linalg.inv(rows)
    # rows use hT-scaled derivatives; rescale so DOFs are physical derivatives
    C[:, :, [1, 2, 4, 5, 7, 8]] *= hT[:, None, None]
    return cen, hT, C


def _hermite_basis(mesh, frames, lam):
    cen, hT, C = frames
    P = mesh.vertices[mesh.triangles]
    X = np.einsum("qk,tkd->tqd", lam, P)
    loc = (X - cen[:, None, :]) / hT[:, None, None]
    v, dx, dy = _mono_table(loc[..., 0], loc[..., 1])  # (nt, nq, 10)
    vals = np.einsum("tqm,tmb->tqb", v, C)
    gx = np.einsum("tqm,tmb->tqb", dx, C) / hT[:, None, None]
    gy = np.einsum("tqm,tmb->tqb", dy, C) / hT[:, None, None]
    return X, vals, np.stack([gx, gy], axis=-1)


def assemble_tri(problem: Problem2D, mesh: TriMesh2D, kind: ElementKind):
    """Full stiffness matrix, load vector, local-to-global map, DOF count, constrained DOFs."""
    loc, n, fixed, edges = _dof_layout(mesh, kind)
    P, B, det = _affine(mesh)
    area = 0.5 * np.abs(det)
    if kind is ElementKind.LagrangeP2:
        rule = triangle_rule(5)
        vals, grads = _p2_basis(rule.bary, B)
        X = np.einsum("qk,tkd->tqd", rule.bary, P)
        Ke = np.einsum("q,tqai,tqbi->tab", rule.weights, grads, grads) * area[:, None, None]
        fq = problem.f(X[..., 0], X[..., 1])
        be = np.einsum("q,tq,qb->tb", rule.weights, fq, vals) * area[:, None]
    else:
        frames = _hermite_frames(mesh)
        rk = triangle_rule(6)
        _, _, grads = _hermite_basis(mesh, frames, rk.bary)
        Ke = np.einsum("q,tqai,tqbi->tab", rk.weights, grads, grads) * area[:, None, None]
        rf = triangle_rule(8)
        X, vals, _ = _hermite_basis(mesh, frames, rf.bary)
        fq = problem.f(X[..., 0], X[..., 1])
        be = np.einsum("q,tq,tqb->tb", rf.weights, fq, vals) * area[:, None]
    nb = loc.shape[1]
    rows = np.repeat(loc, nb, axis=1).ravel()
    cols = np.tile(loc, (1, nb)).ravel()
    A = sps.coo_matrix((Ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    b = np.bincount(loc.ravel(), weights=be.ravel(), minlength=n)
    return A, b, loc, n, fixed, edges


def _condition_estimate(A: sps.csc_matrix, lu) -> float:
    inv = LinearOperator(A.shape, matvec=lu.solve, rmatvec=lambda x: lu.solve(x, trans="T"), dtype=float)
    return float(onenormest(A) * onenormest(inv))


def solve_tri(problem: Problem2D, mesh: TriMesh2D, kind: ElementKind | str, check_condition: bool = False) -> TriSolution:
    """Galerkin solution with homogeneous Dirichlet data.

    For the Hermite element the boundary vertex values and the tangential
    derivative components are constrained to zero.
    """
    if isinstance(kind, str):
        kind = ElementKind.parse(kind)
    A, b, _, n, fixed, edges = assemble_tri(problem, mesh, kind)
    free = np.setdiff1d(np.arange(n), fixed)
    Aff = A[free][:, free].tocsc()
    bf = b[free]
    lu = splu(Aff, permc_spec="COLAMD")
    x = lu.solve(bf)
    r = bf - Aff @ x
    if backward_error(Aff, x, bf, r) > RESIDUAL_TOL:
        x = x + lu.solve(r)
        r = bf - Aff @ x
    err = backward_error(Aff, x, bf, r)
    if err > RESIDUAL_TOL:
        raise SolverError(f"relative residual {err:.3e} exceeds {RESIDUAL_TOL:.0e}")
    if check_condition:
        cond = _condition_estimate(Aff, lu)
        if cond > COND_WARN:
            warnings.warn(f"estimated condition number {cond:.2e}", ConditioningWarning, stacklevel=2)
    c = np.zeros(n)
    c[free] = x
    return TriSolution(mesh, kind, c, n, edges)


# ---------------------------------------------------------------- probes

def node_errors(problem: Problem2D, sol: TriSolution) -> np.ndarray:
    """Per-node errors: |u - u_h| at P2 nodes, or |dx e| + |dy e| at Hermite vertices."""
    V = sol.mesh.vertices
    nv = len(V)
    if sol.kind is ElementKind.LagrangeP2:
        X = np.vstack([V, V[sol.edges].mean(axis=1)])
        return np.abs(problem.u_exact(X[:, 0], X[:, 1], 0, 0) - sol.coeffs[: len(X)])
    gx = problem.u_exact(V[:, 0], V[:, 1], 1, 0) - sol.coeffs[1 : 3 * nv : 3]
    gy = problem.u_exact(V[:, 0], V[:, 1], 0, 1) - sol.coeffs[2 : 3 * nv : 3]
    return np.abs(gx) + np.abs(gy)


@dataclass(frozen=True)
class TriRateRecord:
    kind: str
    alpha: int
    probe: str
    Ndof_coarse: int
    Ndof_fine: int
    err_coarse: float
    err_fine: float
    rate: float

    def csv_row(self) -> list[str]:
        return [self.kind, str(self.alpha), self.probe, str(self.Ndof_coarse), str(self.Ndof_fine),
                fmt(self.err_coarse), fmt(self.err_fine), fmt(self.rate)]


def probe_errors(problem: Problem2D, sol: TriSolution) -> dict[str, float]:
    e = node_errors(problem, sol)
    return {"max": float(e.max()), "x0": float(e[sol.mesh.patch.center_vertex]), "x0prime": float(e[sol.mesh.probe_vertex])}


def probe_rates(problem: Problem2D, solutions, probes=("x0", "x0prime", "max")) -> list[TriRateRecord]:
    """Rates log(e'/e'') / log(sqrt(N''/N')) between consecutive solutions, grouped by probe."""
    if len(solutions) < 2:
        raise ValueError("need at least two refinement levels")
    errs = [probe_errors(problem, s) for s in solutions]
    out = []
    for p in probes:
        for (s0, e0), (s1, e1) in zip(zip(solutions, errs), zip(solutions[1:], errs[1:])):
            a, b = e0[p], e1[p]
            rate = math.log(a / b) / math.log(math.sqrt(s1.n_dof / s0.n_dof)) if a > 0 and b > 0 else math.nan
            alpha = 0 if s0.kind is ElementKind.LagrangeP2 else 1
            out.append(TriRateRecord(s0.kind.value, alpha, p, s0.n_dof, s1.n_dof, a, b, rate))
    return out


def tri_records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RATE_HEADER)
    for r in records:
        w.writerow(r.csv_row())
    return buf.getvalue()


def run_ladder(problem: Problem2D, kind: ElementKind | str, ladder, rings: int = 2, rho: float = 0.25, seed: int = 0):
    """Build a mesh and solve on each level of ``ladder``; returns (meshes, solutions)."""
    kind = ElementKind.parse(kind) if isinstance(kind, str) else kind
    meshes = [build_symmetric_mesh(n, rings, rho, seed) for n in ladder]
    sols = [solve_tri(problem, m, kind) for m in meshes]
    return meshes, sols
