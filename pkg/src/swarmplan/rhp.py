"""Receding-horizon driver: MRF sweeps -> pruning -> minimum-snap smoothing
-> validation/repair -> partial execution, looped until the swarm reaches
the goal."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .fields import InteractionParams, ScalarField
from .grid import Cell, OccupancyGrid
from .mrf import (
    DiscretePath,
    EnergyTrace,
    OptimizeConfig,
    SwarmState,
    make_state,
    optimize,
)
from .paths import PrunedPath, prune
from .trajopt import (
    PolynomialTrajectory,
    SmoothingProblem,
    TimeAllocation,
    UnrepairableError,
    allocate_times,
    sample,
    smooth_and_validate,
)

STATUS_GOAL = "goal-converged"
STATUS_MAX_HORIZONS = "max-horizons"
STATUS_UNREPAIRABLE = "unrepairable"


@dataclass(frozen=True)
class Scenario:
    """A planning problem: map, static energy field, interaction parameters,
    group goal (None for pure formation runs) and start cells."""

    grid: OccupancyGrid
    static: ScalarField | None
    iparams: InteractionParams
    goal: tuple[float, float] | None
    start: tuple[Cell, ...]


@dataclass(frozen=True)
class RhpConfig:
    """Horizon loop parameters on top of the MRF configuration."""

    mrf: OptimizeConfig = field(default_factory=OptimizeConfig)
    planning_horizon: int = 4
    execution_fraction: float = 0.5
    goal_radius: float = 2.0
    max_horizons: int = 200
    v_nominal: float = 1.0
    t_floor: float = 0.1
    d_safe: float = 1.0
    corridor_halfwidth: float = 1.0
    dt: float = 0.05


@dataclass
class HorizonPlan:
    """One horizon's plan: discrete segment, pruned paths, smoothed and
    validated trajectories."""

    index: int
    discrete: list[DiscretePath]
    pruned: list[PrunedPath]
    trajectories: list[PolynomialTrajectory] | None
    problems: list[SmoothingProblem]
    trace: EnergyTrace
    terminal: bool


@dataclass
class ExecutionRecord:
    """Executed portion of a horizon, sampled on a common time grid."""

    t: np.ndarray
    pos: np.ndarray  # (robots, samples, 2)
    vel: np.ndarray
    acc: np.ndarray
    end_cells: tuple[Cell, ...]


@dataclass
class RunResult:
    """Concatenated executed run."""

    status: str
    horizons: int
    t: np.ndarray
    pos: np.ndarray  # (robots, samples, 2)
    vel: np.ndarray
    acc: np.ndarray
    energies: list[float]
    moved_counts: list[int]
    sweep_seconds: list[float]
    discrete: list[list[Cell]]  # executed cells per robot, all horizons
    pruned: list[list[PrunedPath]]  # per horizon


def _smoothing_problems(
    pruned: Sequence[PrunedPath], v_nominal: float, t_floor: float, resolution: float
) -> list[SmoothingProblem]:
    problems = []
    for p in pruned:
        times = allocate_times(p.waypoints, v_nominal, t_floor, resolution)
        problems.append(SmoothingProblem.from_waypoints(p.robot, p.waypoints, times))
    return problems


def plan_horizon(
    state: SwarmState, scenario: Scenario, config: RhpConfig, index: int = 0
) -> HorizonPlan:
    """Run up to H MRF sweeps, prune the window, smooth and validate.

    Full-horizon smoothing is lookahead: only a fraction of the plan is ever
    executed, so an unrepairable full-horizon smoothing leaves
    `trajectories` as None instead of failing the whole run — the executed
    sub-plan gets its own feasibility check in `execute_fraction`.
    """
    mrf_cfg = replace(
        config.mrf, max_sweeps=config.planning_horizon, goal=scenario.goal
    )
    paths, trace = optimize(state, scenario.grid, scenario.static, scenario.iparams, mrf_cfg)
    steps = len(paths[0].cells) - 1
    terminal = steps == 0
    pruned = prune(paths, scenario.grid, config.planning_horizon)
    problems = _smoothing_problems(
        pruned, config.v_nominal, config.t_floor, scenario.grid.resolution
    )
    try:
        trajs = smooth_and_validate(
            problems,
            scenario.grid,
            d_safe=config.d_safe,
            corridor_halfwidth=config.corridor_halfwidth,
            dt=config.dt,
        )
    except UnrepairableError:
        trajs = None
    return HorizonPlan(
        index=index,
        discrete=paths,
        pruned=pruned,
        trajectories=trajs,
        problems=problems,
        trace=trace,
        terminal=terminal,
    )


def execute_fraction(
    plan: HorizonPlan, fraction: float, scenario: Scenario, config: RhpConfig
) -> ExecutionRecord:
    """Advance each robot ceil(fraction * steps) discrete steps.

    The executed sub-path is re-pruned and re-smoothed rest-to-rest so the
    horizon joint is a genuine stop point, then sampled on a common grid.
    """
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    steps = len(plan.discrete[0].cells) - 1
    e = max(1, math.ceil(fraction * steps)) if steps > 0 else 0
    end_cells = tuple(p.cells[min(e, steps)] for p in plan.discrete)
    if e == 0:
        empty = np.zeros((len(plan.discrete), 0, 2))
        return ExecutionRecord(
            t=np.zeros(0), pos=empty, vel=empty.copy(), acc=empty.copy(), end_cells=end_cells
        )

    truncated = [DiscretePath(p.robot, p.cells[: e + 1]) for p in plan.discrete]
    pruned = prune(truncated, scenario.grid, max(e, 1))
    problems = _smoothing_problems(
        pruned, config.v_nominal, config.t_floor, scenario.grid.resolution
    )
    trajs = smooth_and_validate(
        problems,
        scenario.grid,
        d_safe=config.d_safe,
        corridor_halfwidth=config.corridor_halfwidth,
        dt=config.dt,
    )

    t_max = max(tr.total_time for tr in trajs)
    ts = np.arange(0.0, t_max, config.dt)
    if len(ts) == 0 or ts[-1] < t_max:
        ts = np.append(ts, t_max)
    n = len(trajs)
    pos = np.zeros((n, len(ts), 2))
    vel = np.zeros_like(pos)
    acc = np.zeros_like(pos)
    for r, tr in enumerate(trajs):
        for m, t in enumerate(ts):
            if t <= tr.total_time:
                pos[r, m] = tr.eval(t, 0)
                vel[r, m] = tr.eval(t, 1)
                acc[r, m] = tr.eval(t, 2)
            else:
                pos[r, m] = tr.eval(tr.total_time, 0)
    return ExecutionRecord(t=ts, pos=pos, vel=vel, acc=acc, end_cells=end_cells)


def _all_at_goal(positions: Sequence[Cell], goal, radius: float) -> bool:
    return all(math.hypot(p[0] - goal[0], p[1] - goal[1]) <= radius for p in positions)


def run(scenario: Scenario, config: RhpConfig) -> RunResult:
    """Plan-execute loop until goal convergence, a swarm fixed point, the
    horizon cap, or an unrepairable plan."""
    grid = scenario.grid
    state = make_state(scenario.start, grid, config.mrf.k, config.mrf.r_comm)
    n = len(state.positions)

    all_t: list[np.ndarray] = []
    all_pos: list[np.ndarray] = []
    all_vel: list[np.ndarray] = []
    all_acc: list[np.ndarray] = []
    energies: list[float] = []
    moved_counts: list[int] = []
    sweep_seconds: list[float] = []
    discrete: list[list[Cell]] = [[c] for c in state.positions]
    pruned_log: list[list[PrunedPath]] = []
    t_offset = 0.0
    status = STATUS_MAX_HORIZONS
    horizons = 0

    for h in range(config.max_horizons):
        if scenario.goal is not None and _all_at_goal(
            state.positions, scenario.goal, config.goal_radius
        ):
            status = STATUS_GOAL
            break
        plan = plan_horizon(state, scenario, config, index=h)
        horizons = h + 1
        if not energies:
            energies.append(plan.trace.energies[0])
        energies.extend(plan.trace.energies[1:])
        moved_counts.extend(plan.trace.moved_counts)
        sweep_seconds.extend(plan.trace.sweep_seconds)
        pruned_log.append(plan.pruned)

        if plan.terminal:
            # swarm energy converged with unchanged positions: MRF fixed point
            status = STATUS_GOAL
            break

        try:
            record = execute_fraction(plan, config.execution_fraction, scenario, config)
        except UnrepairableError:
            status = STATUS_UNREPAIRABLE
            break
        e = len(record.t)
        if e:
            all_t.append(record.t + t_offset)
            all_pos.append(record.pos)
            all_vel.append(record.vel)
            all_acc.append(record.acc)
            t_offset += float(record.t[-1]) + config.dt

        exec_steps = max(
            1, math.ceil(config.execution_fraction * (len(plan.discrete[0].cells) - 1))
        )
        for r in range(n):
            discrete[r].extend(plan.discrete[r].cells[1 : exec_steps + 1])
        state = make_state(record.end_cells, grid, config.mrf.k, config.mrf.r_comm, t=state.t + exec_steps)
    else:
        status = STATUS_MAX_HORIZONS

    if scenario.goal is not None and status == STATUS_MAX_HORIZONS and _all_at_goal(
        state.positions, scenario.goal, config.goal_radius
    ):
        status = STATUS_GOAL

    if all_t:
        t = np.concatenate(all_t)
        pos = np.concatenate(all_pos, axis=1)
        vel = np.concatenate(all_vel, axis=1)
        acc = np.concatenate(all_acc, axis=1)
    else:
        t = np.zeros(0)
        pos = np.zeros((n, 0, 2))
        vel = np.zeros((n, 0, 2))
        acc = np.zeros((n, 0, 2))

    return RunResult(
        status=status,
        horizons=horizons,
        t=t,
        pos=pos,
        vel=vel,
        acc=acc,
        energies=energies,
        moved_counts=moved_counts,
        sweep_seconds=sweep_seconds,
        discrete=discrete,
        pruned=pruned_log,
    )


@dataclass
class RunMetrics:
    """Summary series and totals for a finished run."""

    t: np.ndarray
    min_dist: np.ndarray
    avg_dist: np.ndarray
    path_lengths: np.ndarray
    sweep_seconds: list[float]
    horizons: int


def metrics(result: RunResult, resolution: float = 1.0) -> RunMetrics:
    """Min/avg pairwise inter-robot distance over time, sampled path lengths,
    and per-sweep timing."""
    n, m, _ = result.pos.shape
    if m == 0:
        raise ValueError("run produced no samples")
    min_d = np.full(m, np.inf)
    sum_d = np.zeros(m)
    pairs = 0
    for i in range(n):
        for j in range(i + 1, n):
            d = np.linalg.norm(result.pos[i] - result.pos[j], axis=1) * resolution
            min_d = np.minimum(min_d, d)
            sum_d += d
            pairs += 1
    avg_d = sum_d / max(pairs, 1)
    lengths = np.array(
        [
            float(np.sum(np.linalg.norm(np.diff(result.pos[i], axis=0), axis=1))) * resolution
            for i in range(n)
        ]
    )
    return RunMetrics(
        t=result.t,
        min_dist=min_d,
        avg_dist=avg_d,
        path_lengths=lengths,
        sweep_seconds=list(result.sweep_seconds),
        horizons=result.horizons,
    )
