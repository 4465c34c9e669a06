"""Mixed-integer linear program containers.

A model is a plain list of bounded variables (continuous or binary), linear
constraints with <= / >= / = senses, and a minimize objective with an
optional constant offset. Models are immutable once frozen by the solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

INF = math.inf


class MilpError(ValueError):
    pass


class ModelMalformed(MilpError):
    pass


class TooManyBinaries(MilpError):
    pass


class NumericalBreakdown(RuntimeError):
    """Pivot magnitudes collapsed below tolerance even after refactorization."""


class VarType(Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"


class Sense(Enum):
    LE = "<="
    GE = ">="
    EQ = "="


class Status(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    LIMIT_REACHED = "limit_reached"


@dataclass
class Variable:
    name: str
    lower: float = 0.0
    upper: float = INF
    vtype: VarType = VarType.CONTINUOUS


@dataclass
class Constraint:
    name: str
    coeffs: dict[int, float]  # variable index -> coefficient
    sense: Sense
    rhs: float


@dataclass
class MilpModel:
    """Variables, constraints, and a minimize objective."""

    name: str = "model"
    variables: list[Variable] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: dict[int, float] = field(default_factory=dict)
    objective_offset: float = 0.0
    _names: dict[str, int] = field(default_factory=dict, repr=False)

    def add_var(self, name: str, lower: float = 0.0, upper: float = INF,
                vtype: VarType = VarType.CONTINUOUS) -> int:
        if name in self._names:
            raise ModelMalformed(f"duplicate variable name {name!r}")
        if vtype is VarType.BINARY:
            lower = max(lower, 0.0)
            upper = min(upper, 1.0)
        if not lower <= upper:
            raise ModelMalformed(f"{name}: empty bound interval [{lower}, {upper}]")
        self.variables.append(Variable(name, float(lower), float(upper), vtype))
        self._names[name] = len(self.variables) - 1
        return len(self.variables) - 1

    def add_constraint(self, name: str, coeffs: dict[int, float], sense: Sense, rhs: float) -> int:
        self.constraints.append(Constraint(name, dict(coeffs), sense, float(rhs)))
        return len(self.constraints) - 1

    def set_objective(self, coeffs: dict[int, float], offset: float = 0.0) -> None:
        self.objective = dict(coeffs)
        self.objective_offset = float(offset)

    def var_index(self, name: str) -> int:
        return self._names[name]

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def binary_indices(self) -> list[int]:
        return [i for i, v in enumerate(self.variables) if v.vtype is VarType.BINARY]

    def validate(self) -> None:
        """Reject NaN/inf coefficients, dangling indices, and bad binary bounds."""
        n = self.num_vars
        for i, v in enumerate(self.variables):
            if math.isnan(v.lower) or math.isnan(v.upper):
                raise ModelMalformed(f"variable {v.name}: NaN bound")
            if v.vtype is VarType.BINARY and not (0.0 <= v.lower <= v.upper <= 1.0):
                raise ModelMalformed(f"variable {v.name}: binary bounds outside [0, 1]")
        for c in self.constraints:
            if math.isnan(c.rhs) or math.isinf(c.rhs):
                raise ModelMalformed(f"constraint {c.name}: bad rhs {c.rhs}")
            for j, a in c.coeffs.items():
                if not 0 <= j < n:
                    raise ModelMalformed(f"constraint {c.name}: unknown variable index {j}")
                if math.isnan(a) or math.isinf(a):
                    raise ModelMalformed(f"constraint {c.name}: bad coefficient {a}")
        for j, a in self.objective.items():
            if not 0 <= j < n:
                raise ModelMalformed(f"objective: unknown variable index {j}")
            if math.isnan(a) or math.isinf(a):
                raise ModelMalformed(f"objective: bad coefficient {a}")

    def dense_arrays(self):
        """(A, senses, rhs, c, lb, ub) as dense numpy arrays."""
        m, n = self.num_constraints, self.num_vars
        A = np.zeros((m, n))
        rhs = np.zeros(m)
        senses = []
        for i, con in enumerate(self.constraints):
            for j, a in con.coeffs.items():
                A[i, j] += a
            rhs[i] = con.rhs
            senses.append(con.sense)
        c = np.zeros(n)
        for j, a in self.objective.items():
            c[j] += a
        lb = np.array([v.lower for v in self.variables])
        ub = np.array([v.upper for v in self.variables])
        return A, senses, rhs, c, lb, ub


@dataclass
class SolveLimits:
    time_limit: float = INF
    node_limit: int = 10_000_000
    relative_gap: float = 1e-6
    integrality_tolerance: float = 1e-6

    def __post_init__(self):
        if self.time_limit <= 0 or self.node_limit <= 0:
            raise MilpError("limits must be positive")
        if self.relative_gap <= 0 or self.integrality_tolerance <= 0:
            raise MilpError("tolerances must be positive")


@dataclass
class MilpSolution:
    status: Status
    assignment: dict[str, float] | None
    objective_value: float | None
    node_count: int
    wall_time: float
    best_bound: float | None = None

    def value(self, name: str) -> float:
        if self.assignment is None:
            raise MilpError("no incumbent available")
        return self.assignment[name]

    @property
    def gap(self) -> float:
        if self.objective_value is None or self.best_bound is None:
            return INF
        denom = max(1.0, abs(self.objective_value))
        return (self.objective_value - self.best_bound) / denom
