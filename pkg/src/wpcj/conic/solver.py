"""Interior-point solution of :class:`ConeProgram` instances.

The program is lowered to the standard form ``min q'x  s.t.  Ax + s = b,
s in K`` and handed to Clarabel (a primal-dual interior-point method for
symmetric cones).  Hermitian blocks enter through their real ``2n`` embedding
in the PSD-triangle cone.  Constraint rows are pre-scaled before the call and
all reported quantities (multipliers, residuals) refer to the unscaled
program.

Multiplier conventions, with ``f`` the objective in *min* form (a ``max``
objective is negated first):

* ``expr <= 0`` and ``expr == 0``: ``y`` with Lagrangian term ``+ y * expr``
  (``y >= 0`` for inequalities).
* ``||u|| <= w``: vector ``(y_0, y_1..)`` in the second-order cone, Lagrangian
  term ``- (y_0 * w + y_rest . u)``.
* Hermitian block ``X``: Hermitian ``Y >= 0``, Lagrangian term ``- Re Tr(Y X)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import clarabel
import numpy as np
import scipy.sparse as sp

from ..errors import InfeasibleProblem, NumericalFailure, UnboundedProblem
from .embed import hermitian_unembed
from .program import ConeProgram, HermitianVar, LinExpr

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200


class Status(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass
class ConeSolution:
    status: Status
    primal: dict[str, object]
    dual: dict[str, object]
    objective_value: float
    iterations: int
    residuals: tuple[float, float, float]  # (primal, dual, gap), relative
    dual_bound: float = math.nan
    solver_status: str = ""
    solve_time: float = 0.0
    certificate: np.ndarray | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL

    def raise_for_status(self) -> "ConeSolution":
        if self.status is Status.OPTIMAL:
            return self
        msg = f"cone solver returned {self.status.value} ({self.solver_status})"
        if self.status is Status.INFEASIBLE:
            raise InfeasibleProblem(msg, self)
        if self.status is Status.UNBOUNDED:
            raise UnboundedProblem(msg, self)
        raise NumericalFailure(msg, self)

    def summary(self) -> dict:
        return {
            "status": self.status.value,
            "objective_value": self.objective_value,
            "iterations": self.iterations,
            "residuals": self.residuals,
        }


# -- lowering ----------------------------------------------------------------


def _svec_index(i: int, j: int) -> int:
    # column-major upper triangle, i <= j
    return j * (j + 1) // 2 + i


def _embedding_rows(var: HermitianVar) -> sp.csr_matrix:
    """Sparse ``E`` with ``E @ params == svec(hermitian_embed(X))``."""
    n = var.n
    m = 2 * n
    pairs = {}
    npairs = n * (n - 1) // 2
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            pairs[(i, j)] = k
            k += 1

    def a_entry(i, j):  # (param index, sign) for Re X_ij
        if i == j:
            return i, 1.0
        if i < j:
            return n + pairs[(i, j)], 1.0
        return n + pairs[(j, i)], 1.0

    def b_entry(i, j):  # Im X_ij
        if i == j:
            return None
        if i < j:
            return n + npairs + pairs[(i, j)], 1.0
        return n + npairs + pairs[(j, i)], -1.0

    rows, cols, vals = [], [], []
    for q in range(m):
        for p in range(q + 1):
            r = _svec_index(p, q)
            scale = 1.0 if p == q else math.sqrt(2.0)
            if p < n and q < n:
                ent, sgn = a_entry(p, q)
            elif p >= n and q >= n:
                ent, sgn = a_entry(p - n, q - n)
            elif p < n <= q:  # -B[p, q-n]
                e = b_entry(p, q - n)
                if e is None:
                    continue
                ent, sgn = e[0], -e[1]
            else:  # B[p-n, q]
                e = b_entry(p - n, q)
                if e is None:
                    continue
                ent, sgn = e
            rows.append(r)
            cols.append(var.offset + ent)
            vals.append(scale * sgn)
    return sp.csr_matrix((vals, (rows, cols)), shape=(m * (m + 1) // 2, 0 + var.offset + var.size))


def _smat(z: np.ndarray, m: int) -> np.ndarray:
    S = np.zeros((m, m))
    for q in range(m):
        for p in range(q + 1):
            v = z[_svec_index(p, q)]
            if p == q:
                S[p, p] = v
            else:
                S[p, q] = S[q, p] = v / math.sqrt(2.0)
    return S


@dataclass
class _Lowered:
    A: sp.csc_matrix
    b: np.ndarray
    q: np.ndarray
    cones: list
    blocks: list  # (kind, constraint/var, row slice)
    row_scale: np.ndarray
    obj_scale: float


def _row(e: LinExpr, n: int) -> tuple[list[int], list[float]]:
    idx = sorted(e.coeffs)
    return idx, [e.coeffs[k] for k in idx]


def lower(p: ConeProgram, scale_rows: bool = True) -> _Lowered:
    n = p.n_real
    sign = -1.0 if p.sense == "max" else 1.0
    q = np.zeros(n)
    for k, v in p.objective.coeffs.items():
        q[k] += sign * v

    rows, cols, vals, b, scales = [], [], [], [], []
    cones, blocks = [], []
    r = 0

    def push(expr: LinExpr, negate: bool, const_sign: float, scale: float):
        nonlocal r
        idx, cf = _row(expr, n)
        s = -1.0 if negate else 1.0
        rows.extend([r] * len(idx))
        cols.extend(idx)
        vals.extend(s * scale * c for c in cf)
        b.append(const_sign * scale * expr.const)
        scales.append(scale)
        r += 1

    def rscale(exprs) -> float:
        if not scale_rows:
            return 1.0
        m = max((abs(v) for e in exprs for v in e.coeffs.values()), default=0.0)
        return 1.0 / m if m > 0 else 1.0

    for kind, cone in (("eq", clarabel.ZeroConeT), ("le", clarabel.NonnegativeConeT)):
        group = [c for c in p.constraints if c.kind == kind]
        if not group:
            continue
        start = r
        for c in group:
            # a'x + c <= 0  ->  a'x + s = -c
            push(c.expr, False, -1.0, rscale([c.expr]))
            blocks.append((kind, c, slice(r - 1, r)))
        cones.append(cone(r - start))

    for c in p.soc_constraints:
        start = r
        sc = rscale([c.bound] + c.vec)
        # s = (bound, vec) = b - A x
        for e in [c.bound] + c.vec:
            push(e, True, 1.0, sc)
        cones.append(clarabel.SecondOrderConeT(r - start))
        blocks.append(("soc", c, slice(start, r)))

    A_parts = []
    if r:
        A_parts.append(sp.csr_matrix((vals, (rows, cols)), shape=(r, n)))
    for var in p.psd_blocks:
        E = _embedding_rows(var)
        E = sp.csr_matrix((E.data, E.indices, E.indptr), shape=(E.shape[0], n))
        A_parts.append(-E)
        m = E.shape[0]
        b.extend([0.0] * m)
        scales.extend([1.0] * m)
        cones.append(clarabel.PSDTriangleConeT(2 * var.n))
        blocks.append(("psd", var, slice(r, r + m)))
        r += m

    A = sp.vstack(A_parts, format="csc") if A_parts else sp.csc_matrix((0, n))
    qmax = float(np.max(np.abs(q))) if q.size else 0.0
    obj_scale = 1.0 / qmax if (scale_rows and qmax > 0) else 1.0
    return _Lowered(A, np.asarray(b, dtype=float), q * obj_scale, cones, blocks,
                    np.asarray(scales, dtype=float), obj_scale)


# -- solve -------------------------------------------------------------------

_STATUS_MAP = {
    "Solved": Status.OPTIMAL,
    "AlmostSolved": Status.OPTIMAL,
    "PrimalInfeasible": Status.INFEASIBLE,
    "AlmostPrimalInfeasible": Status.INFEASIBLE,
    "DualInfeasible": Status.UNBOUNDED,
    "AlmostDualInfeasible": Status.UNBOUNDED,
}


def _settings(tol: float, max_iter: int, **overrides) -> clarabel.DefaultSettings:
    s = clarabel.DefaultSettings()
    s.verbose = False
    s.max_iter = int(max_iter)
    s.tol_gap_abs = tol
    s.tol_gap_rel = tol
    s.tol_feas = tol
    s.tol_infeas_abs = tol
    s.tol_infeas_rel = tol
    s.max_threads = 1
    s.chordal_decomposition_enable = False
    s.presolve_enable = False
    for k, v in overrides.items():
        setattr(s, k, v)
    return s


def kkt_residuals(p: ConeProgram, x: np.ndarray, low: _Lowered, z: np.ndarray) -> tuple[float, float, float]:
    """Relative (primal, dual, gap) residuals of the unscaled program.

    ``z`` holds the multipliers of the unscaled rows.
    """
    A = low.A.multiply(1.0 / low.row_scale[:, None]).tocsc()
    b = low.b / low.row_scale
    q = low.q / low.obj_scale
    viol = 0.0
    for kind, obj, rows in low.blocks:
        if kind == "eq":
            viol = max(viol, abs(obj.expr.evaluate(x)))
        elif kind == "le":
            viol = max(viol, obj.expr.evaluate(x))
        elif kind == "soc":
            u = np.array([e.evaluate(x) for e in obj.vec])
            viol = max(viol, float(np.linalg.norm(u)) - obj.bound.evaluate(x))
        else:
            viol = max(viol, -float(np.linalg.eigvalsh(obj.value(x))[0]))
    ax = A @ x
    pres = viol / max(1.0, float(np.max(np.abs(b), initial=0.0) + np.max(np.abs(x), initial=0.0)
                                 + np.max(np.abs(b - ax), initial=0.0)))
    aty = A.T @ z
    dres = float(np.max(np.abs(aty + q), initial=0.0)) / max(
        1.0, float(np.max(np.abs(q), initial=0.0) + np.max(np.abs(z), initial=0.0)))
    pobj = float(q @ x)
    dobj = float(-b @ z)
    gap_abs = abs(pobj - dobj)
    gap = min(gap_abs, gap_abs / max(1e-300, min(abs(pobj), abs(dobj))))
    return max(pres, 0.0), dres, gap


def solve(p: ConeProgram, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
          **settings) -> ConeSolution:
    """Solve ``p`` to relative accuracy ``tol``.

    Returns a :class:`ConeSolution`; it never raises for solver-side
    outcomes (use :meth:`ConeSolution.raise_for_status`).
    """
    if not (1e-10 <= tol <= 1e-4):
        raise ValueError("tol must lie in [1e-10, 1e-4]")
    low = lower(p)
    n = p.n_real
    P = sp.csc_matrix((n, n))
    solver = clarabel.DefaultSolver(P, low.q, low.A, low.b, low.cones,
                                    _settings(0.1 * tol, max_iter, **settings))
    raw = solver.solve()
    status_name = str(raw.status)
    status = _STATUS_MAP.get(status_name, Status.NUMERICAL_FAILURE)
    x = np.asarray(raw.x, dtype=float)
    z_scaled = np.asarray(raw.z, dtype=float)

    if status is Status.INFEASIBLE:
        cert = z_scaled * low.row_scale
        return ConeSolution(status, {}, {}, math.nan, int(raw.iterations), (math.inf,) * 3,
                            solver_status=status_name, solve_time=raw.solve_time, certificate=cert)
    if status is Status.UNBOUNDED:
        return ConeSolution(status, {}, {}, -math.inf if p.sense == "min" else math.inf,
                            int(raw.iterations), (math.inf,) * 3, solver_status=status_name,
                            solve_time=raw.solve_time, certificate=x.copy())

    z = z_scaled * low.row_scale / low.obj_scale
    residuals = kkt_residuals(p, x, low, z)
    if status is Status.OPTIMAL and max(residuals) > tol:
        status = Status.NUMERICAL_FAILURE

    dual: dict[str, object] = {}
    for kind, obj, rows in low.blocks:
        seg = z[rows]
        if kind in ("eq", "le"):
            dual[obj.name] = float(seg[0])
        elif kind == "soc":
            dual[obj.name] = seg.copy()
        else:
            dual[obj.name] = hermitian_unembed(_smat(seg, 2 * obj.n))

    obj_val = p.objective.evaluate(x)
    b = low.b / low.row_scale
    dobj = float(-b @ z)  # lower bound on the min-form objective (constant excluded)
    dual_bound = (dobj if p.sense == "min" else -dobj) + p.objective.const
    return ConeSolution(status, p.unpack(x), dual, obj_val, int(raw.iterations), residuals,
                        dual_bound=dual_bound, solver_status=status_name,
                        solve_time=float(raw.solve_time))


# Proportional KKT regularization.  It rescues most solves that stall near
# gaps of 1e-8 with the default settings, but on problems that already solve
# it gives slightly less accurate complementarity, so it is only a retry.
STABILIZED = {"static_regularization_proportional": 1e-16}
FALLBACK_TOL = 1e-6


def _tightened(tol: float) -> dict:
    # Clarabel measures residuals on its equilibrated data; after unscaling
    # they can come out a few times above tol, so ask for 100x margin
    t = 0.01 * tol
    return {"tol_feas": t, "tol_gap_abs": t, "tol_gap_rel": t}


def solve_with_retry(p: ConeProgram, tol: float = DEFAULT_TOL, fallback_tol: float = FALLBACK_TOL,
                     max_iter: int = DEFAULT_MAX_ITER) -> ConeSolution:
    """:func:`solve`, then on numerical failure: tighter internal tolerances,
    a stabilized retry at ``tol``, and a stabilized retry at ``fallback_tol``.

    Returns the first optimal solution, or the first attempt's result if none is.
    """
    first = solve(p, tol=tol, max_iter=max_iter)
    if first.status is not Status.NUMERICAL_FAILURE:
        return first
    attempts = [(tol, _tightened(tol)), (tol, STABILIZED)]
    if fallback_tol > tol:
        attempts.append((fallback_tol, STABILIZED))
    for t, settings in attempts:
        sol = solve(p, tol=t, max_iter=max_iter, **settings)
        if sol.ok:
            return sol
    return first
