"""Plain-text dump of a :class:`~wpcj.conic.program.ConeProgram`.

The format is line oriented and stable (documented in ``docs/dump_format.md``)::

    conic-dump 1
    program <name>
    sense <min|max>
    var <kind> <name> <dim> <offset> <n_real>
    ...
    objective
    term <index> <coef>
    const <value>
    constraint <name> <eq|le|soc> <family|->
    term <index> <coef>          (eq/le: one affine form)
    const <value>
    row <k>                      (soc: each vector row, then the bound)
    term ...
    const ...
    bound
    term ...
    const ...
    end

Coefficients are printed with ``%.{precision}e``; terms are sorted by index;
zero coefficients are omitted.
"""

from __future__ import annotations

from .program import ComplexVectorVar, ConeProgram, HermitianVar, LinExpr


def _num(v: float, precision: int) -> str:
    if v == 0.0:
        v = 0.0  # drops the sign of -0.0
    return f"{v:.{precision}e}"


def _expr_lines(e: LinExpr, precision: int) -> list[str]:
    lines = [f"term {k} {_num(v, precision)}" for k, v in sorted(e.coeffs.items()) if v != 0.0]
    lines.append(f"const {_num(e.const, precision)}")
    return lines


def dump_program(p: ConeProgram, precision: int = 12) -> str:
    lines = ["conic-dump 1", f"program {p.name}", f"sense {p.sense}"]
    for var in p.blocks.values():
        if isinstance(var, HermitianVar):
            kind, dim = "hermitian", var.n
        elif isinstance(var, ComplexVectorVar):
            kind, dim = "cvector", var.n
        else:
            kind, dim = "scalar", 1
        lines.append(f"var {kind} {var.name} {dim} {var.offset} {var.size}")
    lines.append("objective")
    lines += _expr_lines(p.objective, precision)
    for c in p.constraints:
        lines.append(f"constraint {c.name} {c.kind} {c.family or '-'}")
        if c.kind in ("eq", "le"):
            lines += _expr_lines(c.expr, precision)
        else:
            for k, row in enumerate(c.vec):
                lines.append(f"row {k}")
                lines += _expr_lines(row, precision)
            lines.append("bound")
            lines += _expr_lines(c.bound, precision)
    lines.append("end")
    return "\n".join(lines) + "\n"
