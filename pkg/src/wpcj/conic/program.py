"""Cone program representation.

A :class:`ConeProgram` holds real decision variables grouped into named
blocks (Hermitian PSD matrices, real scalars, complex vectors), a linear
objective and linear / second-order-cone constraints.  Every constraint is
expressed through :class:`LinExpr`, a sparse real affine form over the flat
real parameter vector of the program.

Real parametrization of the blocks:

* scalar: one real.
* complex vector of length ``n``: ``[Re x_0..Re x_{n-1}, Im x_0..Im x_{n-1}]``.
* Hermitian ``n x n``: the ``n`` diagonal entries, then ``Re X_ij`` for
  ``i < j`` (row-major), then ``Im X_ij`` for ``i < j`` (row-major).  Hermitian
  blocks are implicitly constrained to the PSD cone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class LinExpr:
    """Sparse real affine expression ``sum_k coeffs[k] * x[k] + const``."""

    __slots__ = ("coeffs", "const")

    def __init__(self, coeffs: dict[int, float] | None = None, const: float = 0.0):
        self.coeffs = dict(coeffs) if coeffs else {}
        self.const = float(const)

    @classmethod
    def constant(cls, value: float) -> "LinExpr":
        return cls(None, value)

    def copy(self) -> "LinExpr":
        return LinExpr(self.coeffs, self.const)

    def __add__(self, other) -> "LinExpr":
        out = self.copy()
        if isinstance(other, LinExpr):
            for k, v in other.coeffs.items():
                out.coeffs[k] = out.coeffs.get(k, 0.0) + v
            out.const += other.const
        else:
            out.const += float(other)
        return out

    __radd__ = __add__

    def __neg__(self) -> "LinExpr":
        return LinExpr({k: -v for k, v in self.coeffs.items()}, -self.const)

    def __sub__(self, other) -> "LinExpr":
        return self + (-other)

    def __rsub__(self, other) -> "LinExpr":
        return (-self) + other

    def __mul__(self, alpha) -> "LinExpr":
        a = float(alpha)
        return LinExpr({k: a * v for k, v in self.coeffs.items()}, a * self.const)

    __rmul__ = __mul__

    def __truediv__(self, alpha) -> "LinExpr":
        return self * (1.0 / float(alpha))

    def evaluate(self, x: np.ndarray) -> float:
        return float(sum(v * x[k] for k, v in self.coeffs.items()) + self.const)

    def __repr__(self) -> str:
        return f"LinExpr({len(self.coeffs)} terms, const={self.const:g})"


def _cleanup(coeffs: dict[int, float]) -> dict[int, float]:
    return {k: v for k, v in coeffs.items() if v != 0.0}


@dataclass(frozen=True)
class ScalarVar:
    name: str
    offset: int

    size = 1

    @property
    def expr(self) -> LinExpr:
        return LinExpr({self.offset: 1.0})

    def value(self, x: np.ndarray) -> float:
        return float(x[self.offset])


@dataclass(frozen=True)
class ComplexVectorVar:
    name: str
    n: int
    offset: int

    @property
    def size(self) -> int:
        return 2 * self.n

    def re_inner(self, c: Sequence[complex]) -> LinExpr:
        """``Re{c^H x}``."""
        c = np.asarray(c, dtype=complex).ravel()
        coeffs = {}
        for k in range(self.n):
            coeffs[self.offset + k] = float(c[k].real)
            coeffs[self.offset + self.n + k] = float(c[k].imag)
        return LinExpr(_cleanup(coeffs))

    def im_inner(self, c: Sequence[complex]) -> LinExpr:
        """``Im{c^H x}``."""
        c = np.asarray(c, dtype=complex).ravel()
        coeffs = {}
        for k in range(self.n):
            coeffs[self.offset + k] = float(-c[k].imag)
            coeffs[self.offset + self.n + k] = float(c[k].real)
        return LinExpr(_cleanup(coeffs))

    def inner_parts(self, c: Sequence[complex]) -> list[LinExpr]:
        """Real and imaginary parts of ``c^H x``."""
        return [self.re_inner(c), self.im_inner(c)]

    def components(self) -> list[LinExpr]:
        """All real coordinates, so that ``norm(components) == ||x||``."""
        return [LinExpr({self.offset + k: 1.0}) for k in range(2 * self.n)]

    def entry_parts(self, i: int) -> list[LinExpr]:
        return [LinExpr({self.offset + i: 1.0}), LinExpr({self.offset + self.n + i: 1.0})]

    def value(self, x: np.ndarray) -> np.ndarray:
        seg = x[self.offset:self.offset + 2 * self.n]
        return seg[:self.n] + 1j * seg[self.n:]


@dataclass(frozen=True)
class HermitianVar:
    name: str
    n: int
    offset: int

    @property
    def size(self) -> int:
        return self.n * self.n

    def _upper(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in range(i + 1, self.n)]

    def inner(self, C: np.ndarray) -> LinExpr:
        """``Re Tr(C X)``; for Hermitian ``C`` this is the full trace form."""
        C = np.asarray(C, dtype=complex)
        n = self.n
        if C.shape != (n, n):
            raise ValueError(f"coefficient shape {C.shape} does not match block {self.name} ({n}x{n})")
        coeffs = {}
        for i in range(n):
            coeffs[self.offset + i] = float(C[i, i].real)
        npairs = n * (n - 1) // 2
        for k, (i, j) in enumerate(self._upper()):
            # X_ij = a + jb, X_ji = a - jb
            coeffs[self.offset + n + k] = float((C[j, i] + C[i, j]).real)
            coeffs[self.offset + n + npairs + k] = float((-C[j, i] + C[i, j]).imag)
        return LinExpr(_cleanup(coeffs))

    def trace(self) -> LinExpr:
        return LinExpr({self.offset + i: 1.0 for i in range(self.n)})

    def diag(self, i: int) -> LinExpr:
        return LinExpr({self.offset + i: 1.0})

    def value(self, x: np.ndarray) -> np.ndarray:
        n = self.n
        seg = x[self.offset:self.offset + n * n]
        X = np.diag(seg[:n]).astype(complex)
        npairs = n * (n - 1) // 2
        for k, (i, j) in enumerate(self._upper()):
            X[i, j] = seg[n + k] + 1j * seg[n + npairs + k]
            X[j, i] = np.conj(X[i, j])
        return X

    def params_of(self, X: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`value`."""
        n = self.n
        out = np.empty(n * n)
        out[:n] = np.real(np.diag(X))
        npairs = n * (n - 1) // 2
        for k, (i, j) in enumerate(self._upper()):
            out[n + k] = X[i, j].real
            out[n + npairs + k] = X[i, j].imag
        return out


@dataclass
class Constraint:
    name: str
    kind: str  # "eq" (expr == 0), "le" (expr <= 0), "soc" (||vec|| <= bound)
    expr: LinExpr | None = None
    vec: list[LinExpr] = field(default_factory=list)
    bound: LinExpr | None = None
    family: str = ""


class ConeProgram:
    """Linear program over Hermitian PSD cones and second-order cones."""

    def __init__(self, name: str = "program"):
        self.name = name
        self.blocks: dict[str, HermitianVar | ScalarVar | ComplexVectorVar] = {}
        self.constraints: list[Constraint] = []
        self.objective: LinExpr = LinExpr()
        self.sense: str = "min"
        self._n = 0

    # -- variables -----------------------------------------------------------

    def _declare(self, var):
        if var.name in self.blocks:
            raise ValueError(f"variable {var.name!r} declared twice")
        self.blocks[var.name] = var
        self._n += var.size
        return var

    def hermitian(self, name: str, n: int) -> HermitianVar:
        """Declare an ``n x n`` Hermitian PSD block."""
        if n < 1:
            raise ValueError("block side must be positive")
        return self._declare(HermitianVar(name, int(n), self._n))

    def scalar(self, name: str) -> ScalarVar:
        return self._declare(ScalarVar(name, self._n))

    def complex_vector(self, name: str, n: int) -> ComplexVectorVar:
        return self._declare(ComplexVectorVar(name, int(n), self._n))

    @property
    def n_real(self) -> int:
        return self._n

    @property
    def psd_blocks(self) -> list[HermitianVar]:
        return [b for b in self.blocks.values() if isinstance(b, HermitianVar)]

    @property
    def scalar_vars(self) -> list[ScalarVar]:
        return [b for b in self.blocks.values() if isinstance(b, ScalarVar)]

    @property
    def complex_vector_vars(self) -> list[ComplexVectorVar]:
        return [b for b in self.blocks.values() if isinstance(b, ComplexVectorVar)]

    # -- objective and constraints ------------------------------------------

    def maximize(self, expr: LinExpr) -> None:
        self.objective, self.sense = expr.copy(), "max"

    def minimize(self, expr: LinExpr) -> None:
        self.objective, self.sense = expr.copy(), "min"

    def _name(self, name: str | None, kind: str) -> str:
        name = name or f"{kind}{len(self.constraints)}"
        if any(c.name == name for c in self.constraints) or name in self.blocks:
            raise ValueError(f"constraint name {name!r} already used")
        return name

    def add_eq(self, expr: LinExpr, name: str | None = None, family: str = "") -> str:
        """Add ``expr == 0``."""
        name = self._name(name, "eq")
        self.constraints.append(Constraint(name, "eq", expr=expr.copy(), family=family))
        return name

    def add_le(self, expr: LinExpr, name: str | None = None, family: str = "") -> str:
        """Add ``expr <= 0``."""
        name = self._name(name, "le")
        self.constraints.append(Constraint(name, "le", expr=expr.copy(), family=family))
        return name

    def add_soc(self, vec: Iterable[LinExpr], bound: LinExpr, name: str | None = None,
                family: str = "") -> str:
        """Add ``||vec||_2 <= bound``."""
        name = self._name(name, "soc")
        vec = [v.copy() if isinstance(v, LinExpr) else LinExpr.constant(v) for v in vec]
        if not isinstance(bound, LinExpr):
            bound = LinExpr.constant(bound)
        self.constraints.append(Constraint(name, "soc", vec=vec, bound=bound.copy(), family=family))
        return name

    def constraint(self, name: str) -> Constraint:
        for c in self.constraints:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def eq_constraints(self) -> list[Constraint]:
        return [c for c in self.constraints if c.kind == "eq"]

    @property
    def ineq_constraints(self) -> list[Constraint]:
        return [c for c in self.constraints if c.kind == "le"]

    @property
    def soc_constraints(self) -> list[Constraint]:
        return [c for c in self.constraints if c.kind == "soc"]

    # -- evaluation ----------------------------------------------------------

    def pack(self, values: dict[str, object]) -> np.ndarray:
        """Flat real vector from a name -> value map (missing blocks are zero)."""
        x = np.zeros(self._n)
        for name, var in self.blocks.items():
            if name not in values:
                continue
            val = values[name]
            if isinstance(var, ScalarVar):
                x[var.offset] = float(val)
            elif isinstance(var, ComplexVectorVar):
                v = np.asarray(val, dtype=complex).ravel()
                x[var.offset:var.offset + var.n] = v.real
                x[var.offset + var.n:var.offset + 2 * var.n] = v.imag
            else:
                x[var.offset:var.offset + var.size] = var.params_of(np.asarray(val, dtype=complex))
        return x

    def unpack(self, x: np.ndarray) -> dict[str, object]:
        return {name: var.value(x) for name, var in self.blocks.items()}

    def violations(self, values: dict[str, object]) -> dict[str, float]:
        """Violation magnitude of every constraint (and PSD block) at a point.

        Zero means satisfied.  PSD violations are ``max(0, -lambda_min)``.
        """
        x = self.pack(values)
        out = {}
        for c in self.constraints:
            if c.kind == "eq":
                out[c.name] = abs(c.expr.evaluate(x))
            elif c.kind == "le":
                out[c.name] = max(0.0, c.expr.evaluate(x))
            else:
                lhs = float(np.linalg.norm([e.evaluate(x) for e in c.vec]))
                out[c.name] = max(0.0, lhs - c.bound.evaluate(x))
        for var in self.psd_blocks:
            w = np.linalg.eigvalsh(var.value(x))
            out[var.name] = max(0.0, -float(w[0]))
        return out

    def objective_at(self, values: dict[str, object]) -> float:
        return self.objective.evaluate(self.pack(values))

    def counts(self) -> dict[str, int]:
        """Number of constraints per kind (PSD blocks counted separately)."""
        return {
            "psd": len(self.psd_blocks),
            "eq": len(self.eq_constraints),
            "le": len(self.ineq_constraints),
            "soc": len(self.soc_constraints),
        }

    def families(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.constraints:
            out[c.family] = out.get(c.family, 0) + 1
        return out

    def dump(self, precision: int = 12) -> str:
        from .dump import dump_program

        return dump_program(self, precision)
