"""Deterministic best-bound branch-and-bound over the dual simplex core.

One engine instance serves the whole tree: moving between nodes only changes
binary variable bounds, after which the dual simplex warm-restarts from the
current basis (see ``simplex.DualSimplex.change_var_bounds``). Node order is
best bound with depth-first tie-breaking (newest node wins ties); branching
picks the most fractional binary, ties to the lowest variable index.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .model import (INF, MilpModel, MilpSolution, ModelMalformed, Sense,
                    SolveLimits, Status, TooManyBinaries, VarType)
from .simplex import (LP_INFEASIBLE, LP_OPTIMAL, LP_UNBOUNDED, DualSimplex)

_ROW_INF = math.inf


def _standard_form(model: MilpModel):
    A, senses, rhs, c, lb, ub = model.dense_arrays()
    m = len(senses)
    row_lb = np.empty(m)
    row_ub = np.empty(m)
    for i, s in enumerate(senses):
        if s is Sense.LE:
            row_lb[i], row_ub[i] = -_ROW_INF, rhs[i]
        elif s is Sense.GE:
            row_lb[i], row_ub[i] = rhs[i], _ROW_INF
        else:
            row_lb[i], row_ub[i] = rhs[i], rhs[i]
    # row equilibration: |A| <= 1 keeps absolute pivot tolerances meaningful
    if m:
        scale = np.max(np.abs(A), axis=1)
        scale[scale < 1e-12] = 1.0
        A = A / scale[:, None]
        row_lb = row_lb / scale
        row_ub = row_ub / scale
    return A, c, lb, ub, row_lb, row_ub


def _build_engine(model: MilpModel, kernel=None) -> DualSimplex:
    model.validate()
    A, c, lb, ub, row_lb, row_ub = _standard_form(model)
    return DualSimplex(A, c, lb, ub, row_lb, row_ub, kernel=kernel)


def _assignment(model: MilpModel, x: np.ndarray) -> dict[str, float]:
    return {v.name: float(x[i]) for i, v in enumerate(model.variables)}


def solve_lp_relaxation(model: MilpModel, fixings: dict[str, float] | None = None,
                        kernel=None) -> MilpSolution:
    """Solve the LP with integrality dropped; ``fixings`` pin named binaries.

    Raises ModelMalformed for bad fixing targets, NumericalBreakdown when the
    simplex core cannot proceed.
    """
    start = time.perf_counter()
    engine = _build_engine(model, kernel=kernel)
    if fixings:
        changes = []
        for name, value in fixings.items():
            j = model.var_index(name)
            if model.variables[j].vtype is not VarType.BINARY:
                raise ModelMalformed(f"fixing target {name!r} is not binary")
            v = float(round(value))
            if v not in (0.0, 1.0):
                raise ModelMalformed(f"fixing value for {name!r} must be 0 or 1")
            changes.append((j, v, v))
        # fixings tighten bounds before the cold start
        for j, lo, hi in changes:
            engine.lb[j], engine.ub[j] = lo, hi
    status = engine.solve_from_scratch()
    wall = time.perf_counter() - start
    if status == LP_INFEASIBLE:
        return MilpSolution(Status.INFEASIBLE, None, None, 0, wall)
    if status == LP_UNBOUNDED:
        return MilpSolution(Status.UNBOUNDED, None, None, 0, wall)
    obj = engine.objective() + model.objective_offset
    return MilpSolution(Status.OPTIMAL, _assignment(model, engine.values()), obj, 0, wall,
                        best_bound=obj)


@dataclass(order=True)
class _Node:
    bound: float
    neg_id: int
    fixings: tuple = field(compare=False)  # ((var_index, value), ...) root->leaf
    snap: object = field(compare=False, default=None)  # parent's optimal basis
    parent_serial: int = field(compare=False, default=-1)


class _Tree:
    """Applies node fixings as bound diffs against the engine's current state."""

    def __init__(self, engine: DualSimplex, binaries: list[int]):
        self.engine = engine
        self.applied: dict[int, float] = {}
        self.root_bounds = {j: (engine.lb[j], engine.ub[j]) for j in binaries}

    def move_to(self, fixings: tuple) -> int:
        """Returns the number of bound changes applied (the jump distance)."""
        target = dict(fixings)
        changes = []
        for j, v in target.items():
            if self.applied.get(j) != v:
                changes.append((j, v, v))
        for j in self.applied:
            if j not in target:
                lo, hi = self.root_bounds[j]
                changes.append((j, lo, hi))
        if changes:
            self.engine.change_var_bounds(changes)
        self.applied = target
        return len(changes)


def solve(model: MilpModel, limits: SolveLimits | None = None, kernel=None,
          stats: dict | None = None) -> MilpSolution:
    """Branch-and-bound solve; fully deterministic for identical inputs
    (wall-clock only matters when ``limits.time_limit`` is finite).

    ``stats``, when given, is filled with search counters (incumbent updates,
    prunes, LP pivot totals) for diagnostics and benchmarks.
    """
    limits = limits or SolveLimits()
    if stats is None:
        stats = {}
    stats.update(incumbents=0, first_incumbent_node=None, prunes=0,
                 infeasible_nodes=0, pivots=0)
    start = time.perf_counter()
    engine = _build_engine(model, kernel=kernel)
    binaries = model.binary_indices()
    int_tol = limits.integrality_tolerance
    offset = model.objective_offset

    incumbent_x = None
    incumbent_obj = INF
    node_count = 0
    heap: list[_Node] = []
    next_id = 0
    tree = _Tree(engine, binaries)

    def lp_solve_current(cold: bool) -> str:
        return engine.solve_from_scratch() if cold else engine.reoptimize()

    def fractional_candidates(x):
        if not binaries:
            return np.empty(0, dtype=int), np.empty(0)
        vals = x[binaries]
        frac = np.minimum(np.abs(vals - np.round(vals)), 0.5)
        return np.asarray(binaries), frac

    def gap_eps() -> float:
        if incumbent_obj is INF:
            return 0.0
        return limits.relative_gap * max(1.0, abs(incumbent_obj))

    def finish(status: Status, best_bound: float | None) -> MilpSolution:
        wall = time.perf_counter() - start
        if incumbent_x is None:
            return MilpSolution(status, None, None, node_count, wall, best_bound=best_bound)
        return MilpSolution(status, _assignment(model, incumbent_x), incumbent_obj,
                            node_count, wall, best_bound=best_bound)

    root = _Node(bound=-INF, neg_id=0, fixings=())
    next_id = 1
    heapq.heappush(heap, root)
    cold = True
    solve_serial = 0  # incremented per node LP; dive children skip the restore

    while heap:
        node = heapq.heappop(heap)
        # prune against the incumbent using the (parent-inherited) bound
        if incumbent_x is not None and node.bound >= incumbent_obj - gap_eps():
            continue
        if node_count >= limits.node_limit:
            return finish(Status.LIMIT_REACHED, node.bound if node.bound > -INF else None)
        if time.perf_counter() - start > limits.time_limit:
            return finish(Status.LIMIT_REACHED, node.bound if node.bound > -INF else None)

        moved = tree.move_to(node.fixings)
        if (not cold and node.snap is not None and node.parent_serial != solve_serial
                and moved > 4):
            # distant tree jump: warm-starting from the parent's optimal basis
            # beats dragging the previous node's vertex across the tree.
            # Nearby pops (siblings, uncles) continue from the current basis.
            engine.restore(node.snap)
        status = lp_solve_current(cold)
        cold = False
        solve_serial += 1
        node_count += 1
        stats["pivots"] = engine.total_pivots
        if status == LP_UNBOUNDED:
            return finish(Status.UNBOUNDED, None)
        if status == LP_INFEASIBLE:
            stats["infeasible_nodes"] += 1
            continue
        obj = engine.objective() + offset
        if incumbent_x is not None and obj >= incumbent_obj - gap_eps():
            stats["prunes"] += 1
            continue
        x = engine.values()
        cand, frac = fractional_candidates(x)
        frac_mask = frac > int_tol
        if not np.any(frac_mask):
            # integral: validate numerically, then accept as incumbent
            if engine.max_primal_residual() > 1e-6:
                engine._refactorize()
                status = engine.reoptimize()
                if status != LP_OPTIMAL:
                    continue
                obj = engine.objective() + offset
                x = engine.values()
            incumbent_x = x
            incumbent_obj = obj
            stats["incumbents"] += 1
            if stats["first_incumbent_node"] is None:
                stats["first_incumbent_node"] = node_count
            continue
        scores = np.where(frac_mask, frac, -1.0)
        pick = int(np.argmax(scores))  # most fractional, first index on ties
        j = int(cand[pick])
        snap = engine.snapshot()
        down = _Node(bound=obj, neg_id=-next_id, fixings=node.fixings + ((j, 0.0),),
                     snap=snap, parent_serial=solve_serial)
        up = _Node(bound=obj, neg_id=-(next_id + 1), fixings=node.fixings + ((j, 1.0),),
                   snap=snap, parent_serial=solve_serial)
        next_id += 2
        heapq.heappush(heap, down)
        heapq.heappush(heap, up)

    if incumbent_x is None:
        return finish(Status.INFEASIBLE, None)
    return finish(Status.OPTIMAL, incumbent_obj)


def enumerate_solve(model: MilpModel, kernel=None) -> MilpSolution:
    """Exhaustive oracle: solve one LP per binary assignment, keep the best.

    Exponential in the binary count (capped at 24); used by tests to
    cross-check ``solve``. Ties keep the lexicographically-first assignment.
    """
    start = time.perf_counter()
    binaries = model.binary_indices()
    if len(binaries) > 24:
        raise TooManyBinaries(f"{len(binaries)} binaries exceed the enumeration cap of 24")
    engine = _build_engine(model, kernel=kernel)
    offset = model.objective_offset

    best_x = None
    best_obj = INF
    lp_count = 0
    saw_unbounded = False
    root_bounds = {j: (engine.lb[j], engine.ub[j]) for j in binaries}

    for mask in range(1 << len(binaries)):
        changes = []
        feasible_fix = True
        for pos, j in enumerate(binaries):
            v = float((mask >> (len(binaries) - 1 - pos)) & 1)
            lo0, hi0 = root_bounds[j]
            if v < lo0 - 1e-12 or v > hi0 + 1e-12:
                feasible_fix = False
                break
            changes.append((j, v, v))
        if not feasible_fix:
            continue
        if lp_count == 0:
            for j, lo, hi in changes:
                engine.lb[j], engine.ub[j] = lo, hi
            status = engine.solve_from_scratch()
        else:
            engine.change_var_bounds(changes)
            status = engine.reoptimize()
        lp_count += 1
        if status == LP_UNBOUNDED:
            saw_unbounded = True
            continue
        if status != LP_OPTIMAL:
            continue
        obj = engine.objective() + offset
        if obj < best_obj - 1e-12:
            best_obj = obj
            best_x = engine.values()

    wall = time.perf_counter() - start
    if saw_unbounded:
        return MilpSolution(Status.UNBOUNDED, None, None, lp_count, wall)
    if best_x is None:
        return MilpSolution(Status.INFEASIBLE, None, None, lp_count, wall)
    return MilpSolution(Status.OPTIMAL, _assignment(model, best_x), best_obj, lp_count, wall,
                        best_bound=best_obj)
