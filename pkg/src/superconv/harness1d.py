"""Pointwise convergence-rate measurements on reference element coordinates."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .problems import Problem1D
from .solver1d import DiscreteSolution1D, SolverError, solve_global
from .spline1d import Partition1D, SplineSpace1D

DEFAULT_INTERIOR = (0.1, 0.9)
SUPER_MARGIN = 0.7
NORMAL_MARGIN = 0.3
SATURATION = 1e-12

CSV_HEADER = ["k", "mu", "s", "m", "N_coarse", "N_fine", "err_coarse", "err_fine", "rate", "flag"]


def fmt(x: float) -> str:
    return f"{x:.17g}"


def interior_elements(partition: Partition1D, interior=DEFAULT_INTERIOR) -> np.ndarray:
    bp = partition.breakpoints
    lo, hi = interior
    tol = 1e-12
    elems = np.nonzero((bp[:-1] >= lo - tol) & (bp[1:] <= hi + tol))[0]
    return elems


def interior_max_error(problem: Problem1D, sol: DiscreteSolution1D, s: int, m: float, interior=DEFAULT_INTERIOR) -> float:
    """max |(u - u_h)^{(s)}| at reference coordinate m over elements inside ``interior``.

    Each element is evaluated with its own polynomial piece, so m = +-1 gives
    one-sided values wherever the derivative jumps.
    """
    if not -1.0 <= m <= 1.0:
        raise ValueError("m must lie in [-1, 1]")
    part = sol.space.partition
    lo, hi = interior
    if not (part.a < lo < hi < part.b):
        raise ValueError("interior must lie strictly inside the domain")
    elems = interior_elements(part, interior)
    if elems.size == 0:
        raise ValueError("no element lies inside the interior region")
    bp = part.breakpoints
    x = 0.5 * (1 - m) * bp[elems] + 0.5 * (1 + m) * bp[elems + 1]
    uh = sol.eval_on_elements(elems, x, s)
    u = np.asarray(problem.u_exact(x, s), dtype=float)
    return float(np.max(np.abs(u - uh)))


@dataclass(frozen=True)
class RateRecord:
    k: int
    mu: int
    s: int
    m: float
    N_coarse: int
    N_fine: int
    err_coarse: float
    err_fine: float
    rate: float
    flag: str

    def csv_row(self) -> list[str]:
        return [str(self.k), str(self.mu), str(self.s), fmt(self.m), str(self.N_coarse), str(self.N_fine),
                fmt(self.err_coarse), fmt(self.err_fine), fmt(self.rate), self.flag]


def pair_rate(err_coarse: float, err_fine: float, N_coarse: int, N_fine: int) -> float:
    if err_fine == 0.0 or err_coarse == 0.0:
        return math.nan
    return math.log(err_coarse / err_fine) / math.log(N_fine / N_coarse)


def classify(rate: float, ideal: float, err_coarse: float, err_fine: float) -> str:
    if min(err_coarse, err_fine) < SATURATION or math.isnan(rate):
        return "saturated"
    if rate >= ideal + SUPER_MARGIN:
        return "super"
    if rate <= ideal + NORMAL_MARGIN:
        return "normal"
    return "inconclusive"


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("SUPERCONV_THREADS", "1")))
    except ValueError:
        return 1


def _solve(problem: Problem1D, N: int, k: int, mu: int):
    a, b = problem.domain
    space = SplineSpace1D(Partition1D.uniform(N, a, b), k, mu)
    try:
        return solve_global(problem, space)
    except SolverError as exc:
        return exc


def rate_sweep(problem: Problem1D, k: int, mu: int, s: int, N_list, m_grid, interior=DEFAULT_INTERIOR) -> list[RateRecord]:
    """One RateRecord per (m, consecutive refinement pair).

    Solves that fail produce records with NaN errors and flag ``failed``
    instead of aborting the sweep.
    """
    N_list = [int(n) for n in N_list]
    if len(N_list) < 2:
        raise ValueError("need at least two refinement levels")
    for n0, n1 in zip(N_list, N_list[1:]):
        if n1 != 2 * n0:
            raise ValueError("each refinement level must double the previous")
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        sols = list(pool.map(lambda n: _solve(problem, n, k, mu), N_list))

    ideal = k + 1 - s
    records = []
    for m in m_grid:
        m = float(m)
        errs = []
        for sol in sols:
            errs.append(math.nan if isinstance(sol, Exception) else interior_max_error(problem, sol, s, m, interior))
        for i in range(len(N_list) - 1):
            e0, e1 = errs[i], errs[i + 1]
            if math.isnan(e0) or math.isnan(e1):
                records.append(RateRecord(k, mu, s, m, N_list[i], N_list[i + 1], e0, e1, math.nan, "failed"))
                continue
            r = pair_rate(e0, e1, N_list[i], N_list[i + 1])
            records.append(RateRecord(k, mu, s, m, N_list[i], N_list[i + 1], e0, e1, r, classify(r, ideal, e0, e1)))
    records.sort(key=lambda r: (r.s, r.m, r.N_coarse))
    return records


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.csv_row())
    return buf.getvalue()


def m_grid_from_step(step: float) -> list[float]:
    """Uniform grid on [-1, 1] with the given spacing, always containing -1, 0 and 1."""
    n = int(round(1.0 / step))
    return [i / n for i in range(-n, n + 1)]


def error_legendre_coeffs(problem: Problem1D, sol: DiscreteSolution1D, elem: int, max_degree: int | None = None) -> np.ndarray:
    """Coefficients c_j of the error in the Legendre basis of element ``elem``.

    c_j = (e, L_j) / (L_j, L_j) with L_j mapped to the element; computed with
    a Gauss rule of at least 2k + 6 points.
    """
    k = sol.space.k
    J = k + 1 if max_degree is None else max_degree
    nq = max(2 * k + 6, J + 4)
    xi, wi = np.polynomial.legendre.leggauss(nq)
    bp = sol.space.partition.breakpoints
    x = 0.5 * (1 - xi) * bp[elem] + 0.5 * (1 + xi) * bp[elem + 1]
    e = np.asarray(problem.u_exact(x, 0), dtype=float) - sol.eval_on_elements(np.full(nq, elem), x, 0)
    V = np.polynomial.legendre.legvander(xi, J)  # (nq, J+1)
    # (L_j, L_j) on [-1, 1] is 2 / (2j + 1); the element Jacobian cancels
    return (wi * e) @ V * (2 * np.arange(J + 1) + 1) / 2
