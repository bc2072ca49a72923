"""Command-line front end: scenario configuration and generation, seeded
start sampling, run orchestration and result-file emission.

Subcommands: plan, mrf-only, smooth, bench, render-field.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
import time
from dataclasses import dataclass, field, fields as dc_fields, replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import fields as fmod
from . import rhp
from .fields import (
    GoalParams,
    InteractionParams,
    ObstacleParams,
    build_goal_field,
    build_obstacle_field,
    dump_field,
    static_field,
    zero_field,
)
from .graph import build_interaction_graph, check_connectivity_condition
from .grid import Cell, OccupancyGrid, load_map, threshold_map
from .mrf import OptimizeConfig, make_state, optimize
from .paths import PrunedPath
from .trajopt import SmoothingProblem, allocate_times, sample

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MAX_HORIZONS = 2
EXIT_UNREPAIRABLE = 3


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    """Flat run configuration; defaults follow the standard parameter set."""

    scenario: str = "free"  # free | corridor | blocks, ignored when map_path set
    map_path: str | None = None
    robots: int = 5
    k: int = 3
    order: int = 4
    r_comm: float = math.inf
    attract_amp: float = 0.7
    repulse_amp: float = 0.9
    attract_len: float = 14.0
    repulse_len: float = 4.0
    goal_amp: float = 3.0
    goal_len: float = 20.0
    sigma: float = 1.0
    occupied_value: float = 5.0
    start_x: float | None = None
    start_y: float | None = None
    start_std: float = 2.0
    goal_x: float | None = None
    goal_y: float | None = None
    horizon: int = 4
    execution_fraction: float = 0.5
    goal_radius: float = 2.0
    max_horizons: int = 200
    v_nominal: float = 1.0
    d_safe: float = 1.0
    corridor_halfwidth: float = 1.0
    dt: float = 0.05
    trim_backward: bool = False
    use_goal: bool = True
    seed: int = 0
    map_size: int = 30
    corridor_width: int = 3
    wall_thickness: int = 2
    n_blocks: int = 6
    block_max: int = 6

    def to_text(self) -> str:
        lines = []
        for f in dc_fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ScenarioConfig":
        kwargs = {}
        types = {f.name: f for f in dc_fields(cls)}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, val = (part.strip() for part in line.split("=", 1))
            if key not in types:
                raise ConfigError(f"line {lineno}: unknown key '{key}'")
            kwargs[key] = _parse_value(val)
        return cls(**kwargs)


def _parse_value(val: str):
    low = val.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none",):
        return None
    if low == "inf":
        return math.inf
    try:
        return int(val)
    except ValueError:
        pass
    try:
        return float(val)
    except ValueError:
        return val


def stream_rng(seed: int, stream: str) -> np.random.Generator:
    """Independent generator for a named stream: PCG64 seeded by the run seed
    XOR the first 8 bytes of SHA-256 of the stream name."""
    h = int.from_bytes(hashlib.sha256(stream.encode()).digest()[:8], "big")
    return np.random.default_rng((seed ^ h) & 0xFFFFFFFFFFFFFFFF)


def generate_scenario(kind: str, cfg: ScenarioConfig, seed: int) -> tuple[OccupancyGrid, ScenarioConfig]:
    """Build the map for one of the standard scenario families and fill in
    default start/goal positions."""
    if kind == "free":
        s = cfg.map_size
        prob = np.zeros((s, s))
        grid = OccupancyGrid(prob=prob)
        cfg = replace(
            cfg,
            start_x=cfg.start_x if cfg.start_x is not None else s / 2,
            start_y=cfg.start_y if cfg.start_y is not None else s / 2,
            goal_x=cfg.goal_x if cfg.goal_x is not None else s / 2,
            goal_y=cfg.goal_y if cfg.goal_y is not None else s / 2,
        )
        return grid, cfg
    if kind == "corridor":
        s = 40
        prob = np.zeros((s, s))
        y0 = s // 2 - cfg.wall_thickness // 2
        gap_lo = s // 2 - cfg.corridor_width // 2
        prob[y0 : y0 + cfg.wall_thickness, :] = 1.0
        prob[y0 : y0 + cfg.wall_thickness, gap_lo : gap_lo + cfg.corridor_width] = 0.0
        grid = OccupancyGrid(prob=prob)
        cfg = replace(
            cfg,
            start_x=cfg.start_x if cfg.start_x is not None else s / 2,
            start_y=cfg.start_y if cfg.start_y is not None else 8.0,
            goal_x=cfg.goal_x if cfg.goal_x is not None else s / 2,
            goal_y=cfg.goal_y if cfg.goal_y is not None else float(s - 8),
        )
        return grid, cfg
    if kind == "blocks":
        s = 30
        start = (
            cfg.start_x if cfg.start_x is not None else 5.0,
            cfg.start_y if cfg.start_y is not None else s / 2,
        )
        goal = (
            cfg.goal_x if cfg.goal_x is not None else float(s - 5),
            cfg.goal_y if cfg.goal_y is not None else s / 2,
        )
        rng = stream_rng(seed, "map")
        for _ in range(100):
            prob = np.zeros((s, s))
            for _ in range(cfg.n_blocks):
                w = int(rng.integers(2, cfg.block_max + 1))
                h = int(rng.integers(2, cfg.block_max + 1))
                x = int(rng.integers(0, s - w))
                y = int(rng.integers(0, s - h))
                prob[y : y + h, x : x + w] = 1.0
            # keep a clear pocket at the start and goal
            for cx, cy in (start, goal):
                x0, y0 = int(round(cx)), int(round(cy))
                prob[max(0, y0 - 3) : y0 + 4, max(0, x0 - 3) : x0 + 4] = 0.0
            grid = OccupancyGrid(prob=prob)
            if _connected(grid, start, goal):
                cfg = replace(cfg, start_x=start[0], start_y=start[1], goal_x=goal[0], goal_y=goal[1])
                return grid, cfg
        raise ConfigError("could not generate a connected random-blocks map in 100 tries")
    raise ConfigError(f"unknown scenario kind '{kind}'")


def _connected(grid: OccupancyGrid, a, b) -> bool:
    free = grid.free_mask()
    labels, _ = ndimage.label(free)
    ax, ay = int(round(a[0])), int(round(a[1]))
    bx, by = int(round(b[0])), int(round(b[1]))
    return labels[ay, ax] != 0 and labels[ay, ax] == labels[by, bx]


def sample_start(cfg: ScenarioConfig, grid: OccupancyGrid, seed: int) -> tuple[Cell, ...]:
    """Draw N distinct free start cells from an isotropic Gaussian around the
    start mean, rejecting draws that violate the connectivity condition."""
    rng = stream_rng(seed, "start")
    mean = np.array([cfg.start_x, cfg.start_y], dtype=float)
    cov = np.eye(2) * cfg.start_std**2
    for _ in range(1000):
        pts = rng.multivariate_normal(mean, cov, size=cfg.robots)
        cells = tuple(Cell(int(round(x)), int(round(y))) for x, y in pts)
        if len(set(cells)) != len(cells):
            continue
        if not all(grid.in_bounds(c) and grid.is_free(c) for c in cells):
            continue
        g = build_interaction_graph(cells, cfg.k, cfg.r_comm)
        if check_connectivity_condition(g):
            return cells
    raise ConfigError("could not sample a feasible start state in 1000 attempts")


def build_scenario(cfg: ScenarioConfig) -> tuple[rhp.Scenario, ScenarioConfig]:
    """Materialize grid, fields, and start state from a configuration."""
    if cfg.robots < 2:
        raise ConfigError("need at least 2 robots")
    if not 1 <= cfg.k <= cfg.robots - 1:
        raise ConfigError("k must satisfy 1 <= k <= robots-1")
    if cfg.map_path is not None:
        path = Path(cfg.map_path)
        if not path.exists():
            raise ConfigError(f"map file not found: {path}")
        grid = load_map(path.read_text())
        if cfg.start_x is None or cfg.goal_x is None:
            raise ConfigError("explicit maps require start and goal coordinates")
    else:
        grid, cfg = generate_scenario(cfg.scenario, cfg, cfg.seed)

    iparams = InteractionParams(
        attract_amp=cfg.attract_amp,
        repulse_amp=cfg.repulse_amp,
        attract_len=cfg.attract_len,
        repulse_len=cfg.repulse_len,
    )
    goal = (cfg.goal_x, cfg.goal_y) if cfg.use_goal else None
    if cfg.use_goal and not grid.in_bounds((int(round(cfg.goal_x)), int(round(cfg.goal_y)))):
        raise ConfigError("goal position outside the map")

    obstacle = build_obstacle_field(
        threshold_map(grid, cfg.occupied_value),
        ObstacleParams(sigma=cfg.sigma, occupied_value=cfg.occupied_value),
    )
    if goal is not None:
        goal_field = build_goal_field(grid, GoalParams(goal=goal, amp=cfg.goal_amp, length_scale=cfg.goal_len))
        static = static_field(goal_field, obstacle)
    elif np.any(obstacle.value > 0):
        static = obstacle
    else:
        static = None

    start = sample_start(cfg, grid, cfg.seed)
    return rhp.Scenario(grid=grid, static=static, iparams=iparams, goal=goal, start=start), cfg


def rhp_config(cfg: ScenarioConfig) -> rhp.RhpConfig:
    return rhp.RhpConfig(
        mrf=OptimizeConfig(
            k=cfg.k,
            search_order=cfg.order,
            r_comm=cfg.r_comm,
            trim_backward=cfg.trim_backward,
        ),
        planning_horizon=cfg.horizon,
        execution_fraction=cfg.execution_fraction,
        goal_radius=cfg.goal_radius,
        max_horizons=cfg.max_horizons,
        v_nominal=cfg.v_nominal,
        d_safe=cfg.d_safe,
        corridor_halfwidth=cfg.corridor_halfwidth,
        dt=cfg.dt,
    )


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def write_energy_csv(path: Path, energies, moved_counts):
    lines = ["iteration,energy,moved_robots"]
    for i, e in enumerate(energies):
        moved = moved_counts[i - 1] if i > 0 and i - 1 < len(moved_counts) else 0
        lines.append(f"{i},{_fmt(e)},{moved}")
    path.write_text("\n".join(lines) + "\n")


def write_discrete_csv(path: Path, discrete):
    lines = ["robot,step,x,y"]
    for r, cells in enumerate(discrete):
        for s, c in enumerate(cells):
            lines.append(f"{r},{s},{c[0]},{c[1]}")
    path.write_text("\n".join(lines) + "\n")


def write_pruned_csv(path: Path, pruned_log):
    lines = ["robot,waypoint_index,x,y,source_step"]
    for horizon in pruned_log:
        for p in horizon:
            for w, (c, s) in enumerate(zip(p.waypoints, p.source_steps)):
                lines.append(f"{p.robot},{w},{c[0]},{c[1]},{s}")
    path.write_text("\n".join(lines) + "\n")


def write_trajectories_csv(path: Path, result: rhp.RunResult):
    lines = ["robot,t,x,y,vx,vy,ax,ay"]
    n = result.pos.shape[0]
    for r in range(n):
        for m, t in enumerate(result.t):
            p, v, a = result.pos[r, m], result.vel[r, m], result.acc[r, m]
            lines.append(
                f"{r},{_fmt(t)},{_fmt(p[0])},{_fmt(p[1])},{_fmt(v[0])},{_fmt(v[1])},{_fmt(a[0])},{_fmt(a[1])}"
            )
    path.write_text("\n".join(lines) + "\n")


def write_metrics_csv(path: Path, m: rhp.RunMetrics):
    lines = ["t,min_dist,avg_dist"]
    for i, t in enumerate(m.t):
        lines.append(f"{_fmt(t)},{_fmt(m.min_dist[i])},{_fmt(m.avg_dist[i])}")
    path.write_text("\n".join(lines) + "\n")


def write_timing_csv(path: Path, sweep_seconds):
    lines = ["sweep,seconds"]
    for i, s in enumerate(sweep_seconds):
        lines.append(f"{i},{s:.6f}")
    path.write_text("\n".join(lines) + "\n")


def write_run_outputs(out: Path, result: rhp.RunResult, cfg: ScenarioConfig, resolution: float):
    out.mkdir(parents=True, exist_ok=True)
    write_energy_csv(out / "energy.csv", result.energies, result.moved_counts)
    write_discrete_csv(out / "discrete_paths.csv", result.discrete)
    write_pruned_csv(out / "pruned_paths.csv", result.pruned)
    write_trajectories_csv(out / "trajectories.csv", result)
    if result.pos.shape[1] > 0:
        m = rhp.metrics(result, resolution)
        write_metrics_csv(out / "metrics.csv", m)
        lengths = ",".join(_fmt(v) for v in m.path_lengths)
    else:
        (out / "metrics.csv").write_text("t,min_dist,avg_dist\n")
        lengths = ""
    write_timing_csv(out / "timing.csv", result.sweep_seconds)
    (out / "config.txt").write_text(cfg.to_text())
    summary = [
        f"status: {result.status}",
        f"horizons: {result.horizons}",
        f"sweeps: {len(result.sweep_seconds)}",
        f"final_energy: {_fmt(result.energies[-1]) if result.energies else 'n/a'}",
        f"path_lengths: {lengths}",
    ]
    (out / "summary.txt").write_text("\n".join(summary) + "\n")


def _load_cfg(args) -> ScenarioConfig:
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        cfg = ScenarioConfig.from_text(path.read_text())
    else:
        cfg = ScenarioConfig()
    overrides = {}
    for name in (
        "scenario",
        "robots",
        "k",
        "order",
        "seed",
        "horizon",
        "max_horizons",
        "goal_x",
        "goal_y",
        "start_x",
        "start_y",
        "start_std",
        "trim_backward",
        "use_goal",
        "map_path",
    ):
        v = getattr(args, name, None)
        if v is not None:
            overrides[name] = v
    if overrides:
        cfg = replace(cfg, **overrides)
    if cfg.scenario == "corridor" and "trim_backward" not in overrides:
        cfg = replace(cfg, trim_backward=True)
    return cfg


def cmd_plan(args) -> int:
    cfg = _load_cfg(args)
    scenario, cfg = build_scenario(cfg)
    result = rhp.run(scenario, rhp_config(cfg))
    write_run_outputs(Path(args.out), result, cfg, scenario.grid.resolution)
    print(f"status: {result.status} ({result.horizons} horizons)")
    if result.status == rhp.STATUS_GOAL:
        return EXIT_OK
    if result.status == rhp.STATUS_MAX_HORIZONS:
        return EXIT_MAX_HORIZONS
    return EXIT_UNREPAIRABLE


def cmd_mrf_only(args) -> int:
    cfg = _load_cfg(args)
    scenario, cfg = build_scenario(cfg)
    state = make_state(scenario.start, scenario.grid, cfg.k, cfg.r_comm)
    mrf_cfg = OptimizeConfig(
        k=cfg.k,
        search_order=cfg.order,
        r_comm=cfg.r_comm,
        goal=scenario.goal,
        trim_backward=cfg.trim_backward,
    )
    paths, trace = optimize(state, scenario.grid, scenario.static, scenario.iparams, mrf_cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_energy_csv(out / "energy.csv", trace.energies, trace.moved_counts)
    write_discrete_csv(out / "discrete_paths.csv", [p.cells for p in paths])
    write_timing_csv(out / "timing.csv", trace.sweep_seconds)
    (out / "config.txt").write_text(cfg.to_text())
    print(f"status: {trace.status} ({trace.iterations} sweeps)")
    return EXIT_OK if trace.converged else EXIT_MAX_HORIZONS


def cmd_smooth(args) -> int:
    src = Path(args.waypoints)
    if not src.exists():
        raise ConfigError(f"waypoint file not found: {src}")
    rows = src.read_text().strip().splitlines()
    if rows and rows[0].lower().startswith("robot"):
        rows = rows[1:]
    byrobot: dict[int, list[tuple[float, float]]] = {}
    for row in rows:
        parts = row.split(",")
        r = int(parts[0])
        byrobot.setdefault(r, []).append((float(parts[-2]), float(parts[-1])))
    out_lines = ["robot,t,x,y,vx,vy,ax,ay"]
    for r in sorted(byrobot):
        wps = byrobot[r]
        times = allocate_times(wps, v_nominal=args.v_nominal)
        problem = SmoothingProblem.from_waypoints(r, wps, times)
        traj = problem.solve()
        samples = sample(traj, args.dt)
        for i, t in enumerate(samples.t):
            p, v, a = samples.pos[i], samples.vel[i], samples.acc[i]
            out_lines.append(
                f"{r},{_fmt(t)},{_fmt(p[0])},{_fmt(p[1])},{_fmt(v[0])},{_fmt(v[1])},{_fmt(a[0])},{_fmt(a[1])}"
            )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trajectories.csv").write_text("\n".join(out_lines) + "\n")
    return EXIT_OK


def cmd_bench(args) -> int:
    robot_counts = [int(v) for v in args.robots.split(",")]
    orders = [int(v) for v in args.order.split(",")]
    lines = ["robots,order,ms_per_sweep"]
    for n in robot_counts:
        for order in orders:
            cfg = ScenarioConfig(
                scenario="free", robots=n, k=min(3, n - 1), order=order,
                seed=args.seed, map_size=max(30, 4 * int(math.sqrt(n)) + 20),
            )
            scenario, cfg = build_scenario(cfg)
            state = make_state(scenario.start, scenario.grid, cfg.k, cfg.r_comm)
            mrf_cfg = OptimizeConfig(
                k=cfg.k, search_order=order, goal=scenario.goal, max_sweeps=args.sweeps
            )
            _, trace = optimize(state, scenario.grid, scenario.static, scenario.iparams, mrf_cfg)
            per_sweep = 1000 * float(np.mean(trace.sweep_seconds)) if trace.sweep_seconds else 0.0
            lines.append(f"{n},{order},{per_sweep:.3f}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "bench.csv").write_text("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_render_field(args) -> int:
    cfg = _load_cfg(args)
    scenario, cfg = build_scenario(cfg)
    fld = scenario.static if scenario.static is not None else zero_field(scenario.grid)
    if args.with_robots:
        fld = fmod.render_combined_field(fld, scenario.start, scenario.iparams)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "field.txt").write_text(dump_field(fld))
    return EXIT_OK


def _add_scenario_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--scenario", choices=["free", "corridor", "blocks"])
    p.add_argument("--map-path", dest="map_path")
    p.add_argument("--robots", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--order", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--max-horizons", dest="max_horizons", type=int)
    p.add_argument("--goal-x", dest="goal_x", type=float)
    p.add_argument("--goal-y", dest="goal_y", type=float)
    p.add_argument("--start-x", dest="start_x", type=float)
    p.add_argument("--start-y", dest="start_y", type=float)
    p.add_argument("--start-std", dest="start_std", type=float)
    p.add_argument("--trim-backward", dest="trim_backward", action="store_const", const=True)
    p.add_argument("--no-goal", dest="use_goal", action="store_const", const=False)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swarmplan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="full receding-horizon planning pipeline")
    _add_scenario_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("mrf-only", help="discrete MRF paths, no smoothing")
    _add_scenario_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mrf_only)

    p = sub.add_parser("smooth", help="smooth a waypoint CSV into trajectories")
    p.add_argument("--waypoints", required=True, help="CSV: robot,...,x,y")
    p.add_argument("--v-nominal", dest="v_nominal", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("bench", help="ICM sweep timing benchmark")
    p.add_argument("--robots", default="5,10,15")
    p.add_argument("--order", default="2,4,8")
    p.add_argument("--sweeps", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("render-field", help="write the static field dump")
    _add_scenario_flags(p)
    p.add_argument("--with-robots", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render_field)

    return parser


def run_command(argv) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
