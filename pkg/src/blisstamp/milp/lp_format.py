"""LP text format writer (CPLEX/Gurobi-readable).

Output is a pure function of the model: variables appear in declaration
order, coefficients are printed with 17 significant digits, and the four
sections (Minimize / Subject To / Bounds / Binaries) are always present, so
identical models export byte-identical text.
"""

from __future__ import annotations

import math

from .model import MilpModel, Sense, VarType

_SENSE_TOKEN = {Sense.LE: "<=", Sense.GE: ">=", Sense.EQ: "="}


def _num(x: float) -> str:
    return f"{x:.17g}"


def _terms(coeffs: dict[int, float], names: list[str]) -> str:
    parts = []
    for j in sorted(coeffs):
        a = coeffs[j]
        if a == 0.0:
            continue
        sign = "-" if a < 0 else "+"
        if not parts and sign == "+":
            parts.append(f"{_num(a)} {names[j]}")
        else:
            parts.append(f"{sign} {_num(abs(a))} {names[j]}")
    return " ".join(parts)


def export_lp(model: MilpModel) -> str:
    names = [v.name for v in model.variables]
    lines = [f"\\ LP export: {model.name}", "Minimize"]

    obj = _terms(model.objective, names)
    if model.objective_offset != 0.0:
        const = model.objective_offset
        tail = f"+ {_num(const)}" if const > 0 else f"- {_num(-const)}"
        obj = f"{obj} {tail}" if obj else tail.lstrip("+ ")
    lines.append(f" obj: {obj}" if obj else " obj:")

    lines.append("Subject To")
    for con in model.constraints:
        body = _terms(con.coeffs, names) or "0 " + (names[0] if names else "x")
        lines.append(f" {con.name}: {body} {_SENSE_TOKEN[con.sense]} {_num(con.rhs)}")

    lines.append("Bounds")
    for v in model.variables:
        lo_inf = math.isinf(v.lower) and v.lower < 0
        hi_inf = math.isinf(v.upper) and v.upper > 0
        if lo_inf and hi_inf:
            lines.append(f" {v.name} free")
        elif hi_inf:
            lines.append(f" {v.name} >= {_num(v.lower)}")
        elif lo_inf:
            lines.append(f" {v.name} <= {_num(v.upper)}")
        else:
            lines.append(f" {_num(v.lower)} <= {v.name} <= {_num(v.upper)}")

    lines.append("Binaries")
    binaries = [v.name for v in model.variables if v.vtype is VarType.BINARY]
    for i in range(0, len(binaries), 8):
        lines.append(" " + " ".join(binaries[i:i + 8]))

    lines.append("End")
    return "\n".join(lines) + "\n"
