"""Swarm energy model over the interaction graph's maximal cliques and its
coordinate-descent (ICM) minimization into discrete multi-robot paths."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

from .fields import InteractionParams, ScalarField, interaction_energy
from .graph import (
    InteractionGraph,
    build_interaction_graph,
    check_connectivity_condition,
)
from .grid import Cell, OccupancyGrid, disk_cells
from .paths import point_segment_distance, segments_intersect


class ConnectivityError(ValueError):
    """Initial interaction graph has an isolated robot."""


@dataclass(frozen=True)
class OptimizeConfig:
    """Knobs for one ICM optimization run."""

    k: int = 3
    search_order: int = 4
    r_comm: float = math.inf
    goal: tuple[float, float] | None = None
    trim_backward: bool = False
    eps_converge: float = 1e-6
    patience: int = 2
    max_sweeps: int = 500


@dataclass(frozen=True)
class SwarmState:
    """Robot cell positions at one optimization step plus their graph."""

    positions: tuple[Cell, ...]
    graph: InteractionGraph
    t: int = 0


def make_state(
    positions: Sequence[Cell],
    grid: OccupancyGrid,
    k: int,
    r_comm: float = math.inf,
    t: int = 0,
) -> SwarmState:
    """Validate positions (free, distinct, in bounds) and build the state."""
    cells = tuple(Cell(int(p[0]), int(p[1])) for p in positions)
    if len(set(cells)) != len(cells):
        raise ValueError("robot positions must be pairwise distinct")
    for c in cells:
        if not grid.in_bounds(c):
            raise ValueError(f"robot position {tuple(c)} outside grid")
        if not grid.is_free(c):
            raise ValueError(f"robot position {tuple(c)} is occupied")
    return SwarmState(positions=cells, graph=build_interaction_graph(cells, k, r_comm), t=t)


@dataclass
class EnergyTrace:
    """Per-sweep swarm energies (index 0 is the initial energy)."""

    energies: list[float]
    moved_counts: list[int]
    converged: bool
    iterations: int
    status: str  # 'converged' | 'max-sweeps'
    sweep_seconds: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class DiscretePath:
    """Ordered cells visited by one robot, one entry per optimization step."""

    robot: int
    cells: tuple[Cell, ...]


def local_search_space(
    grid: OccupancyGrid, state: SwarmState, i: int, order: int
) -> list[Cell]:
    """Free cells of the order-n disk around robot i; always contains the
    robot's own (free) cell."""
    return [c for c in disk_cells(state.positions[i], order, grid) if grid.is_free(c)]


def apply_heuristics(
    spaces: Sequence[Sequence[Cell]],
    state: SwarmState,
    goal: tuple[float, float] | None = None,
    trim_backward: bool = False,
) -> list[list[Cell]]:
    """Collision heuristics on the candidate spaces.

    (a) other robots' current cells are removed everywhere; (b) a cell
    claimed by several robots is kept only for the robot whose current
    position is nearest (ties: lower id); (c) optionally, candidates with a
    negative scalar projection onto the robot-to-goal direction are dropped.
    Each robot's own current cell always survives, which keeps ICM
    well-defined.
    """
    positions = state.positions
    occupied_now = set(positions)

    claimed: dict[Cell, int] = {}
    for i, space in enumerate(spaces):
        for c in space:
            if c in occupied_now:
                continue
            d = math.hypot(c[0] - positions[i][0], c[1] - positions[i][1])
            if c not in claimed:
                claimed[c] = i
            else:
                j = claimed[c]
                dj = math.hypot(c[0] - positions[j][0], c[1] - positions[j][1])
                if d < dj:
                    claimed[c] = i

    out: list[list[Cell]] = []
    for i, space in enumerate(spaces):
        own = positions[i]
        cells = [c for c in space if c == own or (c not in occupied_now and claimed.get(c) == i)]
        if trim_backward and goal is not None:
            gx, gy = goal[0] - own[0], goal[1] - own[1]
            norm = math.hypot(gx, gy)
            if norm > 0:
                cells = [
                    c
                    for c in cells
                    if c == own or (c[0] - own[0]) * gx + (c[1] - own[1]) * gy >= 0
                ]
        out.append(cells)
    return out


def clique_energy(
    clique: Sequence[int],
    positions: Sequence[Cell],
    static: ScalarField | None,
    iparams: InteractionParams,
) -> float:
    """Static energy of each member plus pair interaction over all member pairs."""
    e = 0.0
    for i in clique:
        if static is not None:
            e += static.at(positions[i])
    for a in range(len(clique)):
        for b in range(a + 1, len(clique)):
            e += interaction_energy(positions[clique[a]], positions[clique[b]], iparams)
    return e


def swarm_energy(
    state: SwarmState, static: ScalarField | None, iparams: InteractionParams
) -> float:
    """Sum of clique energies over all maximal cliques (shared members count
    once per clique, by definition)."""
    return sum(clique_energy(c, state.positions, static, iparams) for c in state.graph.cliques)


def icm_update(
    state: SwarmState,
    i: int,
    spaces: Sequence[Sequence[Cell]],
    static: ScalarField | None,
    iparams: InteractionParams,
    goal: tuple[float, float] | None = None,
    blocked_segments: Sequence[tuple[Cell, Cell]] | None = None,
) -> Cell:
    """Best candidate cell for robot i with all other robots held fixed.

    Minimizes the summed energy of the cliques containing i over the robot's
    candidate space; ties go to the candidate nearest the goal, then
    row-major order. Candidates whose move segment would cross a blocked
    segment are skipped (the current cell is exempt), so the result never
    increases the frozen-graph swarm energy.
    """
    own = state.positions[i]
    cliques_i = [c for c in state.graph.cliques if i in c]
    positions = list(state.positions)

    def key(c: Cell):
        positions[i] = c
        e = sum(clique_energy(cl, positions, static, iparams) for cl in cliques_i)
        positions[i] = own
        gdist = math.hypot(c[0] - goal[0], c[1] - goal[1]) if goal is not None else 0.0
        return (e, gdist, c[1], c[0])

    best = None
    best_key = None
    for c in spaces[i]:
        if c != own and blocked_segments is not None:
            # held robots (point blocks) need full clearance along the whole
            # move, not just non-crossing: a diagonal slide past an adjacent
            # held robot cannot be staggered away at the trajectory stage
            if any(
                point_segment_distance(s0, own, c) < 1.0
                if s0 == s1
                else segments_intersect(own, c, s0, s1)
                for s0, s1 in blocked_segments
            ):
                continue
        kk = key(c)
        if best_key is None or kk < best_key:
            best, best_key = c, kk
    assert best is not None  # own cell is always admissible
    return best


UpdateHook = Callable[[int, int, SwarmState], None]


def optimize(
    initial: SwarmState,
    grid: OccupancyGrid,
    static: ScalarField | None,
    iparams: InteractionParams,
    config: OptimizeConfig,
    update_hook: UpdateHook | None = None,
) -> tuple[list[DiscretePath], EnergyTrace]:
    """ICM loop: rebuild graph, build and filter candidate spaces, sweep all
    robots in ascending id, until a zero-move sweep, energy stagnation, or
    the sweep cap.

    `update_hook(sweep, robot, state)` is called after every single-robot
    update with the frozen-sweep graph, for instrumentation.
    """
    if not check_connectivity_condition(initial.graph):
        raise ConnectivityError("initial interaction graph has an isolated robot")

    n = len(initial.positions)
    positions = list(initial.positions)
    path_cells: list[list[Cell]] = [[p] for p in positions]
    energies = [swarm_energy(initial, static, iparams)]
    moved_counts: list[int] = []
    sweep_seconds: list[float] = []
    status = "max-sweeps"
    stagnant = 0

    for sweep in range(1, config.max_sweeps + 1):
        tic = time.perf_counter()
        graph = build_interaction_graph(positions, config.k, config.r_comm)
        state = SwarmState(positions=tuple(positions), graph=graph, t=sweep - 1)
        spaces = [local_search_space(grid, state, i, config.search_order) for i in range(n)]
        spaces = apply_heuristics(spaces, state, config.goal, config.trim_backward)

        moved = 0
        sweep_segments: list[tuple[Cell, Cell]] = []
        for i in range(n):
            # robots not yet updated this sweep block their current cell as a
            # point; already updated robots block their whole move segment
            blocked = sweep_segments + [
                (positions[j], positions[j]) for j in range(i + 1, n)
            ]
            state = SwarmState(positions=tuple(positions), graph=graph, t=sweep - 1)
            new = icm_update(state, i, spaces, static, iparams, config.goal, blocked)
            sweep_segments.append((positions[i], new))
            if new != positions[i]:
                moved += 1
                positions[i] = new
            if update_hook is not None:
                update_hook(
                    sweep, i, SwarmState(positions=tuple(positions), graph=graph, t=sweep - 1)
                )
        sweep_seconds.append(time.perf_counter() - tic)

        if moved == 0:
            status = "converged"
            break

        for i in range(n):
            path_cells[i].append(positions[i])
        energies.append(
            swarm_energy(SwarmState(tuple(positions), graph, sweep), static, iparams)
        )
        moved_counts.append(moved)

        if abs(energies[-1] - energies[-2]) < config.eps_converge:
            stagnant += 1
            if stagnant >= config.patience:
                status = "converged"
                break
        else:
            stagnant = 0

    trace = EnergyTrace(
        energies=energies,
        moved_counts=moved_counts,
        converged=(status == "converged"),
        iterations=len(energies) - 1,
        status=status,
        sweep_seconds=sweep_seconds,
    )
    paths = [DiscretePath(robot=i, cells=tuple(cells)) for i, cells in enumerate(path_cells)]
    return paths, trace


def paths_noncrossing_check(paths: Sequence[DiscretePath], step: int) -> bool:
    """True iff no two robots' move segments between `step` and `step + 1`
    intersect (position swaps included)."""
    n = len(paths)
    for i in range(n):
        a1, a2 = paths[i].cells[step], paths[i].cells[step + 1]
        for j in range(i + 1, n):
            b1, b2 = paths[j].cells[step], paths[j].cells[step + 1]
            if segments_intersect(a1, a2, b1, b2):
                return False
    return True
