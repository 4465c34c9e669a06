"""Planners: the receding-horizon MILP planner and the decoupled two-stage
baseline (grid A* for the path, then greedy-latest scan scheduling).

Both planners emit the same ``Plan`` shape and pass the same invariant suite
(``encoder.validate_plan``), so rollouts and metrics treat them uniformly.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

import numpy as np

from .belief import HybridAction, propagate_mean
from .encoder import (HorizonInfeasible, Plan, PlanStep, ProblemConfig,
                      RiskGeometry, decode, encode, plan_objective,
                      risk_geometry)
from .milp import MilpModel, SolveLimits, Status, solve


class PlannerError(RuntimeError):
    pass


class NoSolution(PlannerError):
    """The encoded MILP is infeasible (or no incumbent within limits)."""


class NoPath(PlannerError):
    """Grid search found no route between the start and goal cells."""


class Unschedulable(PlannerError):
    """A path waypoint violates the chance constraints even right after a scan."""


@dataclass
class PlannerOutput:
    plan: Plan
    compute_time: float
    solver_status: str
    replan_index: int = 0
    model: MilpModel | None = None


def plan_milp(problem: ProblemConfig, limits: SolveLimits | None = None,
              replan_index: int = 0) -> PlannerOutput:
    """encode -> solve -> decode. LimitReached incumbents come back flagged
    as suboptimal; infeasibility raises NoSolution."""
    t0 = time.perf_counter()
    try:
        model = encode(problem)
    except HorizonInfeasible as exc:
        raise NoSolution(str(exc)) from exc
    solution = solve(model, limits or SolveLimits())
    if solution.status is Status.INFEASIBLE:
        raise NoSolution(f"MILP infeasible for horizon {problem.horizon}")
    if solution.assignment is None:
        raise NoSolution(f"no incumbent within limits (status {solution.status.value})")
    plan = decode(problem, solution)
    return PlannerOutput(plan=plan, compute_time=time.perf_counter() - t0,
                         solver_status=solution.status.value,
                         replan_index=replan_index, model=model)


# ---------------------------------------------------------------------------
# two-stage baseline: occupancy grid + A* + scan scheduling
# ---------------------------------------------------------------------------

SQRT2 = math.sqrt(2.0)


@dataclass
class GridMap:
    resolution: float
    origin: tuple[float, float]
    nx: int
    ny: int
    occupancy: np.ndarray  # bool [ny, nx], True = occupied

    def cell_of(self, p) -> tuple[int, int]:
        ix = int((p[0] - self.origin[0]) / self.resolution)
        iy = int((p[1] - self.origin[1]) / self.resolution)
        return (min(max(ix, 0), self.nx - 1), min(max(iy, 0), self.ny - 1))

    def center(self, cell) -> np.ndarray:
        ix, iy = cell
        return np.array([self.origin[0] + (ix + 0.5) * self.resolution,
                         self.origin[1] + (iy + 0.5) * self.resolution])

    def free(self, cell) -> bool:
        ix, iy = cell
        if not (0 <= ix < self.nx and 0 <= iy < self.ny):
            return False
        return not self.occupancy[iy, ix]


def _cell_overlaps_polygon(cx0, cy0, cx1, cy1, polygon) -> bool:
    """Separating-axis test between an axis rectangle and a convex polygon."""
    verts = polygon.vertices
    if verts[:, 0].min() > cx1 or verts[:, 0].max() < cx0:
        return False
    if verts[:, 1].min() > cy1 or verts[:, 1].max() < cy0:
        return False
    corners = ((cx0, cy0), (cx1, cy0), (cx1, cy1), (cx0, cy1))
    for h, b in polygon.halfplanes:
        if min(h[0] * x + h[1] * y for x, y in corners) > b:
            return False
    return True


def build_grid(problem: ProblemConfig, geo: RiskGeometry | None = None,
               resolution: float = 0.25) -> GridMap:
    """Occupancy lattice over the workspace; obstacles carry the encoder's
    corner-cutting inflation plus their chance-constraint back-off at t=1.
    Start and goal cells are forced free."""
    geo = geo or risk_geometry(problem)
    xmin, ymin, xmax, ymax = problem.map.bounds
    nx = max(1, int(round((xmax - xmin) / resolution)))
    ny = max(1, int(round((ymax - ymin) / resolution)))
    occ = np.zeros((ny, nx), dtype=bool)
    blobs = [obs.inflate(float(np.max(bts)) if len(bts) else 0.0)
             for obs, bts in zip(geo.inflated, geo.betas)]
    for blob in blobs:
        vx = blob.vertices
        ix0 = max(0, int((vx[:, 0].min() - xmin) / resolution))
        ix1 = min(nx - 1, int((vx[:, 0].max() - xmin) / resolution))
        iy0 = max(0, int((vx[:, 1].min() - ymin) / resolution))
        iy1 = min(ny - 1, int((vx[:, 1].max() - ymin) / resolution))
        for iy in range(iy0, iy1 + 1):
            for ix in range(ix0, ix1 + 1):
                cx0 = xmin + ix * resolution
                cy0 = ymin + iy * resolution
                if _cell_overlaps_polygon(cx0, cy0, cx0 + resolution, cy0 + resolution, blob):
                    occ[iy, ix] = True
    grid = GridMap(resolution=resolution, origin=(xmin, ymin), nx=nx, ny=ny, occupancy=occ)
    for p in (problem.map.start, problem.map.goal):
        ix, iy = grid.cell_of(p)
        occ[iy, ix] = False
    return grid


_NEIGHBORS = ((1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
              (1, 1, SQRT2), (1, -1, SQRT2), (-1, 1, SQRT2), (-1, -1, SQRT2))


def astar(grid: GridMap, start_cell, goal_cell) -> list[tuple[int, int]]:
    """Shortest 8-connected path (diagonal cost sqrt(2), no corner squeezing);
    ties break on (f, h, row-major index) so results are deterministic."""
    if not grid.free(start_cell):
        raise NoPath(f"start cell {start_cell} occupied")
    if not grid.free(goal_cell):
        raise NoPath(f"goal cell {goal_cell} occupied")

    def h(cell):
        dx = abs(cell[0] - goal_cell[0])
        dy = abs(cell[1] - goal_cell[1])
        return max(dx, dy) + (SQRT2 - 1.0) * min(dx, dy)

    def rm(cell):
        return cell[1] * grid.nx + cell[0]

    g = {start_cell: 0.0}
    parent = {start_cell: None}
    closed = set()
    heap = [(h(start_cell), h(start_cell), rm(start_cell), start_cell)]
    while heap:
        f, _, _, cell = heapq.heappop(heap)
        if cell in closed:
            continue
        closed.add(cell)
        if cell == goal_cell:
            path = []
            while cell is not None:
                path.append(cell)
                cell = parent[cell]
            return path[::-1]
        cg = g[cell]
        for dx, dy, w in _NEIGHBORS:
            nxt = (cell[0] + dx, cell[1] + dy)
            if not grid.free(nxt) or nxt in closed:
                continue
            if dx and dy:
                if not (grid.free((cell[0] + dx, cell[1])) and grid.free((cell[0], cell[1] + dy))):
                    continue
            ng = cg + w
            if ng < g.get(nxt, math.inf) - 1e-12:
                g[nxt] = ng
                parent[nxt] = cell
                hn = h(nxt)
                heapq.heappush(heap, (ng + hn, hn, rm(nxt), nxt))
    raise NoPath(f"no grid route from {start_cell} to {goal_cell}")


def _compress_waypoints(points: list[np.ndarray]) -> list[np.ndarray]:
    """Merge collinear runs so moves run at full speed along straight legs."""
    if len(points) <= 2:
        return points
    out = [points[0]]
    for i in range(1, len(points) - 1):
        a, b, c = out[-1], points[i], points[i + 1]
        ab = b - a
        bc = c - b
        cross = ab[0] * bc[1] - ab[1] * bc[0]
        if abs(cross) > 1e-9 or float(ab @ bc) < 0.0:
            out.append(b)
    out.append(points[-1])
    return out


def _cut_moves(waypoints: list[np.ndarray], step: float) -> list[np.ndarray]:
    """Move endpoints along the polyline: maximum-speed segments with one
    shorter residual move per straight leg."""
    ends = []
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        leg = float(np.linalg.norm(b - a))
        if leg <= 1e-12:
            continue
        n_full = int(leg / step + 1e-9)
        direction = (b - a) / leg
        for i in range(1, n_full + 1):
            ends.append(a + direction * (step * i))
        if leg - n_full * step > 1e-9:
            ends.append(b.copy())
        elif n_full:
            ends[-1] = b.copy()  # land exactly on the waypoint
    return ends


def schedule_scans(endpoints: list[np.ndarray], problem: ProblemConfig,
                   geo: RiskGeometry | None = None) -> Plan:
    """Insert scans along a collision-free move sequence.

    Walks the endpoints accumulating t; a scan goes in right before any move
    whose endpoint would violate some obstacle's chance constraint at the
    accumulated t (greedy-latest placement), and one more is placed near the
    end if the arrival state would break the terminal covariance budget.
    """
    geo = geo or risk_geometry(problem)
    dt = problem.dt
    trace = problem.noise_trace()
    t_goal_max = math.sqrt(problem.eps_sigma / trace) if trace > 0 else math.inf

    actions: list[tuple[str, np.ndarray | None]] = []
    cur = np.asarray(problem.map.start, dtype=float)
    t = 1.0
    for p in endpoints:
        t_next = t + dt
        mean_next = np.array([p[0], p[1], t_next * t_next, t_next])
        if not geo.position_ok(mean_next):
            t_next = 1.0 + dt
            mean_next = np.array([p[0], p[1], t_next * t_next, t_next])
            if not geo.position_ok(mean_next):
                raise Unschedulable(
                    f"waypoint ({p[0]:.2f}, {p[1]:.2f}) violates chance "
                    "constraints even immediately after a scan")
            actions.append(("scan", None))
        actions.append(("move", (p - cur) / dt))
        cur = p
        t = t_next

    if t > t_goal_max + 1e-9:
        # terminal covariance budget: place one more scan as late as possible
        # so that arrival happens within moves_after moves of it
        last_scan = max((i for i, (kind, _) in enumerate(actions) if kind == "scan"),
                        default=-1)
        tail_moves = len(actions) - 1 - last_scan
        moves_after = min(int((t_goal_max - 1.0) / dt + 1e-9), tail_moves)
        actions.insert(len(actions) - moves_after, ("scan", None))

    steps = []
    mean = problem.start_mean()
    scans = moves = 0
    for k, (kind, u) in enumerate(actions):
        if kind == "scan":
            action = HybridAction.scan()
            scans += 1
        else:
            action = HybridAction.move(float(u[0]), float(u[1]))
            moves += 1
        mean = propagate_mean(mean, action, dt)
        steps.append(PlanStep(k=k, action=action, predicted_mean=mean.copy(),
                              in_goal=problem.in_goal_set(mean)))
    plan = Plan(steps=steps, objective_value=0.0, scan_count=scans, move_count=moves)
    return Plan(steps=steps, objective_value=plan_objective(problem, plan),
                scan_count=scans, move_count=moves)


def plan_two_stage(problem: ProblemConfig, resolution: float = 0.25,
                   replan_index: int = 0) -> PlannerOutput:
    """Decoupled baseline: A* on the inflated grid, then scan scheduling."""
    t0 = time.perf_counter()
    geo = risk_geometry(problem)
    grid = build_grid(problem, geo, resolution)
    cells = astar(grid, grid.cell_of(problem.map.start), grid.cell_of(problem.map.goal))
    points = [np.asarray(problem.map.start, dtype=float)]
    points += [grid.center(c) for c in cells[1:-1]]
    points.append(np.asarray(problem.map.goal, dtype=float))
    waypoints = _compress_waypoints(points)
    endpoints = _cut_moves(waypoints, problem.v_max * problem.dt)
    plan = schedule_scans(endpoints, problem, geo)
    return PlannerOutput(plan=plan, compute_time=time.perf_counter() - t0,
                         solver_status="heuristic", replan_index=replan_index)


# ---------------------------------------------------------------------------
# planner objects used by the simulation harness
# ---------------------------------------------------------------------------

class MilpPlanner:
    """Receding-horizon MILP planner.

    When ``adaptive_horizon`` is on (default), each (re)plan first estimates
    the steps actually needed from a quick grid-path length plus scan slack,
    and escalates toward the configured horizon only on infeasibility. This
    keeps replan models small and avoids padding plans with idle steps.
    """

    name = "milp"

    def __init__(self, limits: SolveLimits | None = None, adaptive_horizon: bool = True):
        self.limits = limits or SolveLimits()
        self.adaptive_horizon = adaptive_horizon

    def _horizon_candidates(self, problem: ProblemConfig) -> list[int]:
        cap = problem.horizon
        if not self.adaptive_horizon:
            return [cap]
        step = problem.v_max * problem.dt
        try:
            geo = risk_geometry(problem)
            grid = build_grid(problem, geo)
            cells = astar(grid, grid.cell_of(problem.map.start),
                          grid.cell_of(problem.map.goal))
            length = 0.0
            for a, b in zip(cells[:-1], cells[1:]):
                length += grid.resolution * (SQRT2 if (a[0] != b[0] and a[1] != b[1]) else 1.0)
        except (NoPath, Unschedulable):
            g = problem.map.goal
            s = problem.map.start
            length = max(abs(g[0] - s[0]), abs(g[1] - s[1]))
        n_moves = max(1, math.ceil(length / step - 1e-9))
        trace = problem.noise_trace()
        t_goal_max = math.sqrt(problem.eps_sigma / trace) if trace > 0 else math.inf
        scans = 0 if 1.0 + n_moves * problem.dt <= t_goal_max else 1
        guess = n_moves + scans
        cands = sorted({min(guess, cap), min(guess + 3, cap), cap})
        return [c for c in cands if c >= 1]

    def plan(self, problem: ProblemConfig, replan_index: int = 0) -> PlannerOutput:
        t0 = time.perf_counter()
        last_error: Exception | None = None
        for horizon in self._horizon_candidates(problem):
            try:
                out = plan_milp(problem.with_horizon(horizon), self.limits, replan_index)
                out.compute_time = time.perf_counter() - t0  # includes failed horizons
                return out
            except NoSolution as exc:
                last_error = exc
        raise last_error if last_error else NoSolution("no feasible horizon")


class TwoStagePlanner:
    name = "two-stage"

    def __init__(self, resolution: float = 0.25):
        self.resolution = resolution

    def plan(self, problem: ProblemConfig, replan_index: int = 0) -> PlannerOutput:
        return plan_two_stage(problem, self.resolution, replan_index)


def make_planner(name: str, limits: SolveLimits | None = None):
    if name == "milp":
        return MilpPlanner(limits=limits)
    if name == "two-stage":
        return TwoStagePlanner()
    raise PlannerError(f"unknown planner {name!r}")
