"""Self-contained MILP toolkit: model containers, a dense bounded-variable
dual simplex, deterministic branch-and-bound, an enumeration oracle, and an
LP-format writer. The simplex pivot kernels run compiled when the extension
built, NumPy otherwise (see ``backend.KERNEL_BACKEND``)."""

from .backend import KERNEL_BACKEND, get_kernel
from .branch_bound import enumerate_solve, solve, solve_lp_relaxation
from .lp_format import export_lp
from .model import (INF, Constraint, MilpError, MilpModel, MilpSolution,
                    ModelMalformed, NumericalBreakdown, Sense, SolveLimits,
                    Status, TooManyBinaries, Variable, VarType)

__all__ = [
    "KERNEL_BACKEND", "get_kernel", "enumerate_solve", "solve",
    "solve_lp_relaxation", "export_lp", "INF", "Constraint", "MilpError",
    "MilpModel", "MilpSolution", "ModelMalformed", "NumericalBreakdown",
    "Sense", "SolveLimits", "Status", "TooManyBinaries", "Variable", "VarType",
]
