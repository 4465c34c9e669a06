"""Problem-to-MILP encoding and solution decoding.

Decision variables per action step k in 0..N-1 (declared in this order, so
branching tie-breaks prefer early steps):

    ux_k, uy_k            velocity, bounds [-v_max, v_max]
    yM_k, yS_k            binary action selectors, yM_k + yS_k = 1
    rmux/rmuy/rmut2/rmut  slack r = (state at k) * yM_k, McCormick-linearized
    rux_k, ruy_k          slack r = u_k * yM_k (Move side)
    rsx_k, rsy_k          Scan-side control slack, fixed to 0 (Scan has no
                          control influence, kept for a uniform layout)

and per reached state k+1 in 1..N:

    x_k1, y_k1            position, bounded by the workspace rectangle
    t2_k1, t_k1           time-since-scan state, bounds [1, (1+k1*dt)^...]
    z_k1                  binary out-of-goal indicator (z_N fixed to 0)
    ax_k1, ay_k1          L1 goal-distance epigraph variables
    yo_<o>_<i>_k1         binary per obstacle half-plane (big-M disjunction)

Constraint tally (closed form, verified by tests): with E = sum of obstacle
edge counts and O = number of obstacles,

    variables   = N * (19 + E)
    constraints = N * (36 + E + O)  [+ 1 when the horizon forces a scan]

per step: 1 selector row, 16 + 8 McCormick rows, 4 mean-transition rows;
per state: 4 epigraph rows, 2 goal big-M rows, 1 covariance-trace row,
E big-M obstacle rows and O disjunction rows. The optional extra row is the
terminal scan window (see ``_scan_window``), implied by integer feasibility.

The state covariance is never a model variable: Sigma_k = Sigma_w * t_k^2 is
substituted into the chance constraints and the trace goal condition, which
keeps everything linear in the t (or t^2) state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .belief import (ActionKind, HybridAction, propagate_mean, risk_backoff,
                     risk_backoff_variance_form)
from .geometry import ConvexObstacle, WorldMap
from .milp import MilpModel, MilpSolution, Sense, Status, VarType


class EncoderError(ValueError):
    pass


class InvalidConfig(EncoderError):
    pass


class RiskInfeasible(EncoderError):
    """The chance-constraint back-off at t=1 already excludes the start."""


class HorizonInfeasible(EncoderError):
    """Too few steps to leave the start and still reach the goal ball."""


class InconsistentSolution(EncoderError):
    """Solver state variables disagree with recomputed mean propagation."""


AUTO = "auto"


@dataclass(frozen=True)
class ProblemConfig:
    """One planning instance: world, horizon, uncertainty, and costs."""

    map: WorldMap
    horizon: int = 20
    dt: float = 1.0
    sigma_w: np.ndarray = None  # 4x4, only the position block is used
    v_max: float = 0.75
    delta_c: float = 0.1
    eps_g: float = 0.5
    eps_sigma: float = 0.02
    cost_scan: float = 100.0
    cost_outside: float = 0.5
    big_m: object = AUTO  # AUTO or (M_obstacle, M_goal)
    variance_backoff: bool = False
    risk_allocation: str = "uniform"

    def __post_init__(self):
        if self.sigma_w is None:
            sw = np.zeros((4, 4))
            sw[0, 0] = sw[1, 1] = 4e-4
            object.__setattr__(self, "sigma_w", sw)
        else:
            object.__setattr__(self, "sigma_w", np.asarray(self.sigma_w, dtype=float))
        if self.horizon < 1:
            raise InvalidConfig(f"horizon must be >= 1, got {self.horizon}")
        if self.dt <= 0:
            raise InvalidConfig(f"dt must be > 0, got {self.dt}")
        if not 0.0 < self.delta_c < 0.5:
            raise InvalidConfig(f"delta_c must be in (0, 0.5), got {self.delta_c}")
        if self.eps_g <= 0:
            raise InvalidConfig(f"eps_g must be > 0, got {self.eps_g}")
        if self.v_max <= 0:
            raise InvalidConfig(f"v_max must be > 0, got {self.v_max}")
        if self.eps_sigma <= self.noise_trace():
            raise InvalidConfig(
                f"eps_sigma {self.eps_sigma} must exceed the post-scan covariance "
                f"trace {self.noise_trace()} or the goal is never reachable")
        if self.risk_allocation != "uniform":
            raise InvalidConfig(f"unsupported risk allocation {self.risk_allocation!r}")

    def noise_trace(self) -> float:
        return float(self.sigma_w[0, 0] + self.sigma_w[1, 1])

    def with_start(self, start) -> "ProblemConfig":
        """Same problem re-rooted at a new start position (for replanning)."""
        new_map = WorldMap(bounds=self.map.bounds, start=np.asarray(start, dtype=float),
                           goal=self.map.goal, obstacles=self.map.obstacles)
        return ProblemConfig(map=new_map, horizon=self.horizon, dt=self.dt,
                             sigma_w=self.sigma_w, v_max=self.v_max, delta_c=self.delta_c,
                             eps_g=self.eps_g, eps_sigma=self.eps_sigma,
                             cost_scan=self.cost_scan, cost_outside=self.cost_outside,
                             big_m=self.big_m, variance_backoff=self.variance_backoff,
                             risk_allocation=self.risk_allocation)

    def with_horizon(self, horizon: int) -> "ProblemConfig":
        return ProblemConfig(map=self.map, horizon=int(horizon), dt=self.dt,
                             sigma_w=self.sigma_w, v_max=self.v_max, delta_c=self.delta_c,
                             eps_g=self.eps_g, eps_sigma=self.eps_sigma,
                             cost_scan=self.cost_scan, cost_outside=self.cost_outside,
                             big_m=self.big_m, variance_backoff=self.variance_backoff,
                             risk_allocation=self.risk_allocation)

    def start_mean(self) -> np.ndarray:
        return np.array([self.map.start[0], self.map.start[1], 1.0, 1.0])

    def in_goal_set(self, mean4) -> bool:
        gx, gy = self.map.goal
        l1 = abs(mean4[0] - gx) + abs(mean4[1] - gy)
        return l1 <= self.eps_g + 1e-9 and self.noise_trace() * mean4[2] <= self.eps_sigma + 1e-9


@dataclass(frozen=True)
class RiskGeometry:
    """Per-obstacle data shared by the encoder, baseline, and validators.

    ``inflated`` carries the corner-cutting guard (v_max * dt / 2 outward
    offset); ``betas[o][i]`` is the per-unit-t back-off of half-plane i of
    obstacle o at the uniformly allocated risk delta_c / N_o.
    """

    inflated: list[ConvexObstacle]
    betas: list[np.ndarray]
    delta_each: float
    relax_at_goal: bool
    variance_form: bool

    def step_margin(self, mean4) -> float:
        """min over obstacles of the best separating-plane margin at this
        state; >= 0 means every chance constraint holds."""
        t_term = mean4[2] if self.variance_form else mean4[3]
        worst = math.inf
        for obs, betas in zip(self.inflated, self.betas):
            best = -math.inf
            for (h, b), beta in zip(obs.halfplanes, betas):
                best = max(best, h[0] * mean4[0] + h[1] * mean4[1] - beta * t_term - b)
            worst = min(worst, best)
        return worst

    def position_ok(self, mean4) -> bool:
        return not self.inflated or self.step_margin(mean4) >= -1e-6


def risk_geometry(config: ProblemConfig) -> RiskGeometry:
    obstacles = config.map.obstacles
    n_o = len(obstacles)
    delta_each = config.delta_c / max(n_o, 1)
    backoff = risk_backoff_variance_form if config.variance_backoff else risk_backoff
    inflated = [o.inflate(config.v_max * config.dt / 2.0) for o in obstacles]
    betas = [np.array([backoff(h, config.sigma_w, delta_each) for h, _ in o.halfplanes])
             for o in inflated]

    # Obstacle rows may be switched off at in-goal states only when the whole
    # goal ball keeps positive margin at t=1 against every inflated obstacle.
    relax = True
    goal = config.map.goal
    for obs, bts in zip(inflated, betas):
        if obs.signed_clearance(goal) < float(np.max(bts)) + config.eps_g:
            relax = False
            break
    return RiskGeometry(inflated=inflated, betas=betas, delta_each=delta_each,
                        relax_at_goal=relax, variance_form=config.variance_backoff)


def check_start_feasible(config: ProblemConfig, geo: RiskGeometry) -> None:
    start4 = config.start_mean()
    if not geo.position_ok(start4):
        raise RiskInfeasible(
            "start position violates the chance-constraint back-off at t=1 "
            "(margin %.4f m)" % geo.step_margin(start4))


# Variable-name helpers; tests and the decoder read solutions through these.
def vn_u(axis: str, k: int) -> str:
    return f"u{axis}_{k}"


def vn_sel(action: str, k: int) -> str:
    return f"y{action}_{k}"


def vn_rmu(comp: str, k: int) -> str:
    return f"rmu{comp}_{k}"


def vn_ru(axis: str, k: int) -> str:
    return f"ru{axis}_{k}"


def vn_rs(axis: str, k: int) -> str:
    return f"rs{axis}_{k}"


def vn_state(comp: str, k: int) -> str:
    return f"{comp}_{k}"


def vn_z(k: int) -> str:
    return f"z_{k}"


def vn_ax(axis: str, k: int) -> str:
    return f"a{axis}_{k}"


def vn_obs(o: int, i: int, k: int) -> str:
    return f"yo_{o}_{i}_{k}"


def _auto_big_m(config: ProblemConfig, geo: RiskGeometry) -> tuple[float, float]:
    xmin, ymin, xmax, ymax = config.map.bounds
    diag = math.hypot(xmax - xmin, ymax - ymin)
    max_b = 0.0
    beta_max = 0.0
    for obs, bts in zip(geo.inflated, geo.betas):
        for (_, b) in obs.halfplanes:
            max_b = max(max_b, abs(b))
        if len(bts):
            beta_max = max(beta_max, float(np.max(bts)))
    t_max = 1.0 + config.horizon * config.dt
    t_term = t_max * t_max if config.variance_backoff else t_max
    m_obs = diag + max_b + beta_max * t_term
    m_goal = 2.0 * diag
    # the trace row needs M_goal >= tr(Sigma_w) * t_max^2 - eps_sigma
    m_goal = max(m_goal, config.noise_trace() * t_max * t_max - config.eps_sigma + 1.0)
    return m_obs, m_goal


def encode(config: ProblemConfig) -> MilpModel:
    """Build the MILP for one planning instance.

    Raises InvalidConfig / RiskInfeasible before constructing anything when
    the instance cannot be posed.
    """
    geo = risk_geometry(config)
    check_start_feasible(config, geo)
    if config.big_m is AUTO or config.big_m == AUTO:
        m_obs, m_goal = _auto_big_m(config, geo)
    else:
        m_obs, m_goal = float(config.big_m[0]), float(config.big_m[1])

    n_steps = config.horizon
    dt = config.dt
    xmin, ymin, xmax, ymax = config.map.bounds
    gx, gy = float(config.map.goal[0]), float(config.map.goal[1])
    trace = config.noise_trace()
    l1_cap = (xmax - xmin) + (ymax - ymin)
    start4 = config.start_mean()

    model = MilpModel(name=f"plan_N{n_steps}")
    obj: dict[int, float] = {}

    # Per-step reachability boxes: |x_k - start| <= k * v_max * dt forward,
    # and |x_k - goal| <= eps_g + (N - k) * v_max * dt backward (the plan must
    # end inside the goal ball). Exact consequences of the speed bound, so
    # the integer feasible set is unchanged while the relaxation tightens.
    step = config.v_max * dt
    trace0 = config.noise_trace()
    t_goal_max = math.sqrt(config.eps_sigma / trace0) if trace0 > 0 else math.inf

    def axis_box(k: int, s0: float, g0: float, lo_w: float, hi_w: float):
        lo = max(lo_w, s0 - k * step, g0 - config.eps_g - (n_steps - k) * step)
        hi = min(hi_w, s0 + k * step, g0 + config.eps_g + (n_steps - k) * step)
        if hi < lo <= hi + 1e-9:
            lo = hi
        return lo, hi

    def state_bounds(comp: str, k: int) -> tuple[float, float]:
        if comp == "x":
            return axis_box(k, float(start4[0]), gx, xmin, xmax)
        if comp == "y":
            return axis_box(k, float(start4[1]), gy, ymin, ymax)
        t_hi = 1.0 + k * dt
        if k == n_steps and math.isfinite(t_goal_max):
            t_hi = min(t_hi, t_goal_max)  # z_N = 0 forces the trace budget
        if comp == "t2":
            return 1.0, t_hi * t_hi
        return 1.0, t_hi

    for k in range(1, n_steps + 1):
        xlo, xhi = state_bounds("x", k)
        ylo, yhi = state_bounds("y", k)
        if xlo > xhi + 1e-9 or ylo > yhi + 1e-9:
            raise HorizonInfeasible(
                f"horizon {n_steps} cannot both leave the start and reach the goal "
                f"(empty reachable box at step {k})")

    # declare everything step by step
    state_idx: list[dict[str, int]] = [dict()]  # k=0 is the constant start
    for k in range(n_steps):
        k1 = k + 1
        ux = model.add_var(vn_u("x", k), -config.v_max, config.v_max)
        uy = model.add_var(vn_u("y", k), -config.v_max, config.v_max)
        ym = model.add_var(vn_sel("M", k), vtype=VarType.BINARY)
        ys = model.add_var(vn_sel("S", k), vtype=VarType.BINARY)
        obj[ys] = config.cost_scan
        rmu = {}
        for comp in ("x", "y", "t2", "t"):
            if k == 0:
                lo = hi = float(start4[("x", "y", "t2", "t").index(comp)])
            else:
                lo, hi = state_bounds(comp, k)
            rmu[comp] = model.add_var(vn_rmu(comp, k), min(0.0, lo), max(0.0, hi))
        ru = {a: model.add_var(vn_ru(a, k), -config.v_max, config.v_max) for a in ("x", "y")}
        for a in ("x", "y"):
            model.add_var(vn_rs(a, k), 0.0, 0.0)  # Scan control slack, inert

        st = {}
        for comp in ("x", "y", "t2", "t"):
            lo, hi = state_bounds(comp, k1)
            st[comp] = model.add_var(vn_state(comp, k1), lo, hi)
        # distance floor from the reachability box; when it clears the goal
        # ball the out-of-goal indicator is already decided
        xlo, xhi = state_bounds("x", k1)
        ylo, yhi = state_bounds("y", k1)
        ax_lo = max(0.0, gx - xhi, xlo - gx)
        ay_lo = max(0.0, gy - yhi, ylo - gy)
        ax_hi = max(abs(xlo - gx), abs(xhi - gx))
        ay_hi = max(abs(ylo - gy), abs(yhi - gy))
        z_lo = 1.0 if ax_lo + ay_lo > config.eps_g + 1e-9 else 0.0
        z = model.add_var(vn_z(k1), lower=z_lo, vtype=VarType.BINARY)
        ax = model.add_var(vn_ax("x", k1), ax_lo, min(l1_cap, ax_hi + config.eps_g))
        ay = model.add_var(vn_ax("y", k1), ay_lo, min(l1_cap, ay_hi + config.eps_g))
        for o, obs in enumerate(geo.inflated):
            for i in range(len(obs.halfplanes)):
                model.add_var(vn_obs(o, i, k1), vtype=VarType.BINARY)
        obj[z] = config.cost_outside
        state_idx.append(st)

        # selector exclusivity
        model.add_constraint(f"sel_{k}", {ym: 1.0, ys: 1.0}, Sense.EQ, 1.0)

        # McCormick rows for rmu = state_k * yM
        for comp in ("x", "y", "t2", "t"):
            r = rmu[comp]
            if k == 0:
                c0 = float(start4[("x", "y", "t2", "t").index(comp)])
                lo = hi = c0
                h_var = None
            else:
                lo, hi = state_bounds(comp, k)
                h_var = state_idx[k][comp]
            model.add_constraint(f"mca_{comp}_{k}", {r: 1.0, ym: -lo}, Sense.GE, 0.0)
            model.add_constraint(f"mcb_{comp}_{k}", {r: 1.0, ym: -hi}, Sense.LE, 0.0)
            if h_var is None:
                model.add_constraint(f"mcc_{comp}_{k}", {r: 1.0, ym: -hi}, Sense.GE, lo - hi)
                model.add_constraint(f"mcd_{comp}_{k}", {r: 1.0, ym: -lo}, Sense.LE, hi - lo)
            else:
                model.add_constraint(f"mcc_{comp}_{k}", {r: 1.0, h_var: -1.0, ym: -hi},
                                     Sense.GE, -hi)
                model.add_constraint(f"mcd_{comp}_{k}", {r: 1.0, h_var: -1.0, ym: -lo},
                                     Sense.LE, -lo)

        # McCormick rows for ru = u_k * yM
        for a in ("x", "y"):
            r, u = ru[a], (ux if a == "x" else uy)
            v = config.v_max
            model.add_constraint(f"mua_{a}_{k}", {r: 1.0, ym: v}, Sense.GE, 0.0)
            model.add_constraint(f"mub_{a}_{k}", {r: 1.0, ym: -v}, Sense.LE, 0.0)
            model.add_constraint(f"muc_{a}_{k}", {r: 1.0, u: -1.0, ym: -v}, Sense.GE, -v)
            model.add_constraint(f"mud_{a}_{k}", {r: 1.0, u: -1.0, ym: v}, Sense.LE, v)

        # mean transition rows (Move matrices on the slacks; Scan keeps x, y
        # through state_k - rmu and resets the time states through yS)
        if k == 0:
            model.add_constraint(f"tx_{k}", {st["x"]: 1.0, ru["x"]: -dt},
                                 Sense.EQ, float(start4[0]))
            model.add_constraint(f"ty_{k}", {st["y"]: 1.0, ru["y"]: -dt},
                                 Sense.EQ, float(start4[1]))
        else:
            prev = state_idx[k]
            model.add_constraint(f"tx_{k}", {st["x"]: 1.0, prev["x"]: -1.0, ru["x"]: -dt},
                                 Sense.EQ, 0.0)
            model.add_constraint(f"ty_{k}", {st["y"]: 1.0, prev["y"]: -1.0, ru["y"]: -dt},
                                 Sense.EQ, 0.0)
        model.add_constraint(
            f"tt2_{k}",
            {st["t2"]: 1.0, rmu["t2"]: -1.0, rmu["t"]: -2.0 * dt, ym: -dt * dt, ys: -1.0},
            Sense.EQ, 0.0)
        model.add_constraint(
            f"tt_{k}", {st["t"]: 1.0, rmu["t"]: -1.0, ym: -dt, ys: -1.0}, Sense.EQ, 0.0)

        # goal indicator: L1 epigraph, big-M gates, covariance-trace gate
        model.add_constraint(f"gx1_{k1}", {ax: 1.0, st["x"]: -1.0}, Sense.GE, -gx)
        model.add_constraint(f"gx2_{k1}", {ax: 1.0, st["x"]: 1.0}, Sense.GE, gx)
        model.add_constraint(f"gy1_{k1}", {ay: 1.0, st["y"]: -1.0}, Sense.GE, -gy)
        model.add_constraint(f"gy2_{k1}", {ay: 1.0, st["y"]: 1.0}, Sense.GE, gy)
        model.add_constraint(f"gz1_{k1}", {ax: 1.0, ay: 1.0, z: -m_goal},
                             Sense.LE, config.eps_g)
        model.add_constraint(f"gz2_{k1}", {ax: -1.0, ay: -1.0, z: m_goal},
                             Sense.LE, m_goal - config.eps_g)
        model.add_constraint(f"gtr_{k1}", {st["t2"]: trace, z: -m_goal},
                             Sense.LE, config.eps_sigma)

        # obstacle chance constraints: big-M disjunction over half-planes,
        # optionally relaxed at in-goal states
        t_var = st["t2"] if config.variance_backoff else st["t"]
        for o, (obs, bts) in enumerate(zip(geo.inflated, geo.betas)):
            dis = {}
            for i, ((hx, hy), b) in enumerate(((h, b) for h, b in obs.halfplanes)):
                yo = model.var_index(vn_obs(o, i, k1))
                coeffs = {st["x"]: float(hx), st["y"]: float(hy),
                          t_var: -float(bts[i]), yo: -m_obs}
                rhs = float(b) - m_obs
                if geo.relax_at_goal:
                    coeffs[z] = -m_obs
                    rhs -= m_obs
                model.add_constraint(f"ob_{o}_{i}_{k1}", coeffs, Sense.GE, rhs)
                dis[yo] = 1.0
            model.add_constraint(f"od_{o}_{k1}", dis, Sense.GE, 1.0)

    # terminal: in the goal set at the horizon end
    zN = model.var_index(vn_z(n_steps))
    if model.variables[zN].lower > 0.5:
        raise HorizonInfeasible(
            f"horizon {n_steps} cannot reach the goal L1 ball")
    model.variables[zN].upper = 0.0

    # implied by z_N = 0: the covariance budget caps the time since the last
    # scan at the horizon end, so when the horizon is long enough to need a
    # scan at all, one must fall inside the terminal window. Integer-feasible
    # plans already satisfy this; emitting it lifts the LP bound.
    if _scan_window(config) is not None:
        first_k = _scan_window(config)
        coeffs = {model.var_index(vn_sel("S", k)): 1.0 for k in range(first_k, n_steps)}
        model.add_constraint("scanwin", coeffs, Sense.GE, 1.0)

    offset = 0.0 if config.in_goal_set(start4) else config.cost_outside
    model.set_objective(obj, offset)
    model.validate()
    return model


def _scan_window(config: ProblemConfig) -> int | None:
    """First step index of the terminal scan window, or None when the
    horizon is short enough to reach the goal without ever scanning."""
    trace = config.noise_trace()
    if trace <= 0:
        return None
    t_goal_max = math.sqrt(config.eps_sigma / trace)
    if 1.0 + config.horizon * config.dt <= t_goal_max + 1e-12:
        return None
    window = int((t_goal_max - 1.0) / config.dt + 1e-9)
    return max(0, config.horizon - 1 - window)


def expected_var_count(config: ProblemConfig) -> int:
    edges = sum(len(o.halfplanes) for o in config.map.obstacles)
    return config.horizon * (19 + edges)


def expected_constraint_count(config: ProblemConfig) -> int:
    edges = sum(len(o.halfplanes) for o in config.map.obstacles)
    rows = config.horizon * (36 + edges + len(config.map.obstacles))
    if _scan_window(config) is not None:
        rows += 1
    return rows


@dataclass(frozen=True)
class PlanStep:
    k: int
    action: HybridAction
    predicted_mean: np.ndarray  # belief mean after the action (state k+1)
    in_goal: bool


@dataclass(frozen=True)
class Plan:
    steps: list[PlanStep]
    objective_value: float
    scan_count: int
    move_count: int

    @property
    def horizon(self) -> int:
        return len(self.steps)

    def first_goal_step(self) -> int | None:
        for s in self.steps:
            if s.in_goal:
                return s.k
        return None


def decode(config: ProblemConfig, solution: MilpSolution) -> Plan:
    """Selector binaries -> hybrid actions; verifies the solver's state
    variables against exact mean propagation (1e-6) before trusting them."""
    if solution.assignment is None:
        raise InconsistentSolution("solution carries no assignment")
    val = solution.assignment.__getitem__
    mean = config.start_mean()
    steps = []
    scans = moves = 0
    for k in range(config.horizon):
        if val(vn_sel("S", k)) > 0.5:
            action = HybridAction.scan()
            scans += 1
        else:
            action = HybridAction.move(val(vn_u("x", k)), val(vn_u("y", k)))
            moves += 1
        mean = propagate_mean(mean, action, config.dt)
        k1 = k + 1
        solved = np.array([val(vn_state(c, k1)) for c in ("x", "y", "t2", "t")])
        if np.max(np.abs(solved - mean)) > 1e-6:
            raise InconsistentSolution(
                f"state {k1} deviates from propagated mean by "
                f"{np.max(np.abs(solved - mean)):.2e}")
        steps.append(PlanStep(k=k, action=action, predicted_mean=mean.copy(),
                              in_goal=val(vn_z(k1)) < 0.5))
    return Plan(steps=steps, objective_value=float(solution.objective_value),
                scan_count=scans, move_count=moves)


def plan_objective(config: ProblemConfig, plan: Plan) -> float:
    """Scan cost plus out-of-goal step cost, the identity the MILP minimizes."""
    outside = 0 if config.in_goal_set(config.start_mean()) else 1
    outside += sum(0 if s.in_goal else 1 for s in plan.steps)
    return config.cost_scan * plan.scan_count + config.cost_outside * outside


class PlanInvariantError(AssertionError):
    pass


def validate_plan(config: ProblemConfig, plan: Plan, geo: RiskGeometry | None = None,
                  check_objective: bool = True) -> None:
    """Invariant suite every emitted plan must pass (both planners).

    Checks mean-chain consistency, scan resets, velocity bounds, per-step
    chance constraints (outside the goal set when relaxation applies), goal
    accounting for in-goal steps, and the objective identity.
    """
    geo = geo or risk_geometry(config)
    mean = config.start_mean()
    gx, gy = config.map.goal
    trace = config.noise_trace()
    for s in plan.steps:
        if s.action.kind is ActionKind.MOVE:
            if abs(s.action.u[0]) > config.v_max + 1e-6 or abs(s.action.u[1]) > config.v_max + 1e-6:
                raise PlanInvariantError(f"step {s.k}: velocity exceeds v_max")
        nxt = propagate_mean(mean, s.action, config.dt)
        if np.max(np.abs(nxt - s.predicted_mean)) > 1e-9:
            raise PlanInvariantError(f"step {s.k}: predicted mean breaks propagation")
        if s.action.kind is ActionKind.SCAN:
            if abs(nxt[2] - 1.0) > 1e-9 or abs(nxt[3] - 1.0) > 1e-9:
                raise PlanInvariantError(f"step {s.k}: scan did not reset time state")
            if abs(nxt[0] - mean[0]) > 1e-9 or abs(nxt[1] - mean[1]) > 1e-9:
                raise PlanInvariantError(f"step {s.k}: scan moved the position")
        if abs(nxt[2] - nxt[3] * nxt[3]) > 1e-9:
            raise PlanInvariantError(f"step {s.k}: t^2 state inconsistent with t")
        if s.in_goal:
            l1 = abs(nxt[0] - gx) + abs(nxt[1] - gy)
            if l1 > config.eps_g + 1e-6:
                raise PlanInvariantError(f"step {s.k}: in-goal step outside eps_g ball")
            if trace * nxt[2] > config.eps_sigma + 1e-6:
                raise PlanInvariantError(f"step {s.k}: in-goal step violates trace bound")
        if not (s.in_goal and geo.relax_at_goal):
            if not geo.position_ok(nxt):
                raise PlanInvariantError(
                    f"step {s.k}: chance constraint violated (margin "
                    f"{geo.step_margin(nxt):.2e})")
        mean = nxt
    if plan.scan_count + plan.move_count != len(plan.steps):
        raise PlanInvariantError("scan_count + move_count != number of steps")
    if check_objective:
        expect = plan_objective(config, plan)
        if abs(expect - plan.objective_value) > 1e-6:
            raise PlanInvariantError(
                f"objective {plan.objective_value} != recomputed {expect}")


def plan_to_dict(config: ProblemConfig, plan: Plan) -> dict:
    steps = []
    for s in plan.steps:
        entry = {
            "k": s.k,
            "action": "scan" if s.action.kind is ActionKind.SCAN else "move",
            "predicted_mean": [float(v) for v in s.predicted_mean],
            "in_goal": s.in_goal,
        }
        if s.action.kind is ActionKind.MOVE:
            entry["u"] = [s.action.u[0], s.action.u[1]]
        steps.append(entry)
    return {
        "objective_value": plan.objective_value,
        "scan_count": plan.scan_count,
        "move_count": plan.move_count,
        "horizon": plan.horizon,
        "steps": steps,
    }
