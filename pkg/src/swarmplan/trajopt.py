"""Minimum-snap piecewise polynomial smoothing of pruned waypoint paths:
equality-constrained QP assembly and KKT solve, time allocation, sampling,
and the validate/repair feasibility loop."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grid import OccupancyGrid
from .paths import point_segment_distance

DEFAULT_DEGREE = 7
SNAP_ORDER = 4
T_FLOOR = 0.1


class TrajectoryError(RuntimeError):
    """QP assembly or solve failure (inconsistent or rank-deficient system)."""


class UnrepairableError(TrajectoryError):
    """Validation violations persisted through the repair round limit."""


@dataclass(frozen=True)
class TimeAllocation:
    """Per-segment durations; `knots` prepends t = 0 and accumulates."""

    durations: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.durations, dtype=float)
        if d.ndim != 1 or d.size < 1:
            raise ValueError("need at least one segment duration")
        if np.any(d <= 0):
            raise ValueError("segment durations must be positive")
        d.setflags(write=False)
        object.__setattr__(self, "durations", d)

    @property
    def knots(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.durations)])

    @property
    def total(self) -> float:
        return float(np.sum(self.durations))


def allocate_times(
    waypoints, v_nominal: float = 1.0, t_floor: float = T_FLOOR, resolution: float = 1.0
) -> TimeAllocation:
    """Constant-velocity traversal times, floored for degenerate segments."""
    wp = np.asarray(waypoints, dtype=float)
    if wp.shape[0] < 2:
        raise ValueError("need at least two waypoints")
    if v_nominal <= 0:
        raise ValueError("v_nominal must be positive")
    seg = np.linalg.norm(np.diff(wp, axis=0), axis=1) * resolution
    return TimeAllocation(durations=np.maximum(seg / v_nominal, t_floor))


@dataclass(frozen=True)
class QuadraticProgram:
    """min x^T cost x subject to eq_mat x = eq_vec (the paired-inequality
    form collapses to this equality block)."""

    cost: np.ndarray
    eq_mat: np.ndarray
    eq_vec: np.ndarray


def _perm(j: int, q: int) -> float:
    # falling factorial j! / (j-q)!
    out = 1.0
    for r in range(q):
        out *= j - r
    return out


def _deriv_row(tau: float, degree: int, order: int) -> np.ndarray:
    row = np.zeros(degree + 1)
    for j in range(order, degree + 1):
        row[j] = _perm(j, order) * tau ** (j - order)
    return row


def _snap_gram(duration: float, degree: int, q: int) -> np.ndarray:
    """Closed-form integral of products of q-th derivative monomials."""
    g = np.zeros((degree + 1, degree + 1))
    for j in range(q, degree + 1):
        for l in range(q, degree + 1):
            p = j + l - 2 * q
            g[j, l] = _perm(j, q) * _perm(l, q) * duration ** (p + 1) / (p + 1)
    return g


def build_qp(
    waypoints_1d,
    times: TimeAllocation,
    degree: int = DEFAULT_DEGREE,
    deriv_order: int = SNAP_ORDER,
) -> QuadraticProgram:
    """Assemble the minimum-snap QP for one dimension.

    Decision vector: per-segment monomial coefficients in local time.
    Constraints: waypoint interpolation at both ends of every segment, rest
    boundaries (derivatives 1..3 zero at the trajectory ends), and
    derivative continuity of orders 1..3 at interior knots. Snap continuity
    is not imposed; it emerges at the optimum.
    """
    wp = np.asarray(waypoints_1d, dtype=float)
    n_seg = len(times.durations)
    if wp.shape[0] != n_seg + 1:
        raise ValueError("waypoint count must be segment count + 1")
    if degree < 2 * deriv_order - 1:
        raise ValueError(f"degree must be >= {2 * deriv_order - 1} for order-{deriv_order} objective")

    ncoef = degree + 1
    nvar = ncoef * n_seg
    cost = np.zeros((nvar, nvar))
    for s, T in enumerate(times.durations):
        i = s * ncoef
        cost[i : i + ncoef, i : i + ncoef] = _snap_gram(float(T), degree, deriv_order)

    rows = []
    rhs = []

    def add(seg: int, tau: float, order: int, value: float | None, other: int | None = None):
        row = np.zeros(nvar)
        row[seg * ncoef : (seg + 1) * ncoef] = _deriv_row(tau, degree, order)
        if other is not None:
            row[other * ncoef : (other + 1) * ncoef] -= _deriv_row(0.0, degree, order)
        rows.append(row)
        rhs.append(0.0 if value is None else value)

    for s, T in enumerate(times.durations):
        add(s, 0.0, 0, wp[s])
        add(s, float(T), 0, wp[s + 1])
    for order in range(1, deriv_order):
        add(0, 0.0, order, 0.0)
        add(n_seg - 1, float(times.durations[-1]), order, 0.0)
    for s in range(n_seg - 1):
        for order in range(1, deriv_order):
            add(s, float(times.durations[s]), order, None, other=s + 1)

    return QuadraticProgram(
        cost=cost, eq_mat=np.array(rows), eq_vec=np.array(rhs)
    )


def solve_qp(qp: QuadraticProgram, residual_tol: float = 1e-8) -> np.ndarray:
    """Exact equality-constrained minimizer via the KKT linear system.

    A tiny ridge (1e-9) is added to the cost's null directions when the
    plain system is singular.
    """
    n = qp.cost.shape[0]
    m = qp.eq_mat.shape[0]
    rhs = np.concatenate([np.zeros(n), qp.eq_vec])

    def kkt(reg: float) -> np.ndarray:
        top = np.hstack([2 * qp.cost + reg * np.eye(n), qp.eq_mat.T])
        bot = np.hstack([qp.eq_mat, np.zeros((m, m))])
        return np.vstack([top, bot])

    sol = None
    for reg in (0.0, 1e-9):
        try:
            cand = np.linalg.solve(kkt(reg), rhs)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(cand)):
            sol = cand
            break
    if sol is None:
        sol, *_ = np.linalg.lstsq(kkt(1e-9), rhs, rcond=None)
        if not np.all(np.isfinite(sol)):
            raise TrajectoryError("KKT system rank-deficient beyond regularization")
    x = sol[:n]
    residual = np.max(np.abs(qp.eq_mat @ x - qp.eq_vec)) if m else 0.0
    if residual > residual_tol:
        raise TrajectoryError(f"constraints inconsistent (residual {residual:.3g})")
    return x


@dataclass(frozen=True)
class PolynomialTrajectory:
    """Per-dimension piecewise polynomials in local segment time."""

    coeffs: np.ndarray  # (dims, segments, degree+1)
    times: TimeAllocation

    @property
    def dims(self) -> int:
        return self.coeffs.shape[0]

    @property
    def degree(self) -> int:
        return self.coeffs.shape[2] - 1

    @property
    def total_time(self) -> float:
        return self.times.total

    def _segment(self, t: float) -> tuple[int, float]:
        knots = self.times.knots
        idx = int(np.searchsorted(knots, t, side="right")) - 1
        idx = min(max(idx, 0), len(self.times.durations) - 1)
        return idx, t - knots[idx]

    def eval(self, t: float, order: int = 0) -> np.ndarray:
        """Value of the `order`-th derivative at time t (clamped to [0, T])."""
        t = min(max(t, 0.0), self.total_time)
        seg, tau = self._segment(t)
        degree = self.degree
        out = np.zeros(self.dims)
        for d in range(self.dims):
            # Horner on the derivative coefficients
            acc = 0.0
            for j in range(degree, order - 1, -1):
                acc = acc * tau + self.coeffs[d, seg, j] * _perm(j, order)
            out[d] = acc
        return out


def min_snap(
    waypoints,
    times: TimeAllocation,
    degree: int = DEFAULT_DEGREE,
    deriv_order: int = SNAP_ORDER,
) -> PolynomialTrajectory:
    """Solve the minimum-snap QP independently per dimension and assemble."""
    wp = np.asarray(waypoints, dtype=float)
    if wp.ndim == 1:
        wp = wp[:, None]
    if wp.shape[0] < 2:
        raise ValueError("need at least two waypoints")
    n_seg = len(times.durations)
    ncoef = degree + 1
    coeffs = np.zeros((wp.shape[1], n_seg, ncoef))
    for d in range(wp.shape[1]):
        qp = build_qp(wp[:, d], times, degree, deriv_order)
        x = solve_qp(qp)
        coeffs[d] = x.reshape(n_seg, ncoef)
    return PolynomialTrajectory(coeffs=coeffs, times=times)


def qp_objective(traj: PolynomialTrajectory, deriv_order: int = SNAP_ORDER) -> float:
    """Integral of the squared `deriv_order` derivative over the trajectory."""
    total = 0.0
    for d in range(traj.dims):
        for s, T in enumerate(traj.times.durations):
            g = _snap_gram(float(T), traj.degree, deriv_order)
            c = traj.coeffs[d, s]
            total += float(c @ g @ c)
    return total


@dataclass(frozen=True)
class TrajectorySamples:
    """Equally spaced samples of position, velocity and acceleration."""

    t: np.ndarray
    pos: np.ndarray  # (n, dims)
    vel: np.ndarray
    acc: np.ndarray


def sample(traj: PolynomialTrajectory, dt: float) -> TrajectorySamples:
    """Sample at t = 0, dt, ..., including the final time."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    T = traj.total_time
    ts = np.arange(0.0, T, dt)
    if len(ts) == 0 or ts[-1] < T:
        ts = np.append(ts, T)
    pos = np.array([traj.eval(t, 0) for t in ts])
    vel = np.array([traj.eval(t, 1) for t in ts])
    acc = np.array([traj.eval(t, 2) for t in ts])
    return TrajectorySamples(t=ts, pos=pos, vel=vel, acc=acc)


@dataclass(frozen=True)
class Violation:
    """One feasibility failure found while sampling planned trajectories."""

    kind: str  # 'obstacle' | 'separation' | 'corridor'
    robot: int
    time: float
    segment: int | None = None
    other: int | None = None


@dataclass
class SmoothingProblem:
    """One robot's smoothing input, mutated by the repair loop.

    `chords` are the fixed pruned-path segments used for the corridor check;
    `chord_of_segment` maps each QP segment to its owning chord (segments
    inserted by repair keep the parent's chord).
    """

    robot: int
    waypoints: list[tuple[float, float]]
    durations: list[float]
    chords: list[tuple[tuple[float, float], tuple[float, float]]]
    chord_of_segment: list[int]
    rest_indices: set[int] = field(default_factory=set)

    @classmethod
    def from_waypoints(cls, robot: int, waypoints, times: TimeAllocation) -> "SmoothingProblem":
        wps = [tuple(map(float, w)) for w in waypoints]
        chords = [(wps[i], wps[i + 1]) for i in range(len(wps) - 1)]
        return cls(
            robot=robot,
            waypoints=wps,
            durations=[float(d) for d in times.durations],
            chords=chords,
            chord_of_segment=list(range(len(chords))),
        )

    def solve(self, degree: int = DEFAULT_DEGREE) -> PolynomialTrajectory:
        # interior rest waypoints split the solve into independent
        # rest-to-rest pieces; a lone rest-to-rest segment is its chord
        rests = sorted(r for r in self.rest_indices if 0 < r < len(self.waypoints) - 1)
        if not rests:
            return min_snap(self.waypoints, TimeAllocation(np.array(self.durations)), degree)
        bounds = [0, *rests, len(self.waypoints) - 1]
        coeff_chunks = []
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            piece = min_snap(
                self.waypoints[lo : hi + 1],
                TimeAllocation(np.array(self.durations[lo:hi])),
                degree,
            )
            coeff_chunks.append(piece.coeffs)
        return PolynomialTrajectory(
            np.concatenate(coeff_chunks, axis=1),
            TimeAllocation(np.array(self.durations)),
        )


def validate(
    trajs: Sequence[PolynomialTrajectory],
    grid: OccupancyGrid,
    problems: Sequence[SmoothingProblem],
    d_safe: float = 1.0,
    corridor_halfwidth: float = 1.0,
    dt: float = 0.05,
) -> list[Violation]:
    """Sample all trajectories on a common grid and report obstacle hits,
    separation losses and corridor departures. Empty report = feasible.

    Distances are in meters (cell units times grid resolution); robots past
    their final time hold their final position.
    """
    res = grid.resolution
    t_max = max(tr.total_time for tr in trajs)
    ts = np.arange(0.0, t_max, dt)
    if len(ts) == 0 or ts[-1] < t_max:
        ts = np.append(ts, t_max)

    pos = np.array([[tr.eval(min(t, tr.total_time), 0) for t in ts] for tr in trajs])
    violations: list[Violation] = []

    for r, tr in enumerate(trajs):
        knots = tr.times.knots
        for n, t in enumerate(ts):
            x, y = pos[r, n]
            cx, cy = round(x), round(y)
            seg_idx = min(
                max(int(np.searchsorted(knots, min(t, tr.total_time), side="right")) - 1, 0),
                len(tr.times.durations) - 1,
            )
            if not grid.in_bounds((cx, cy)) or not grid.is_free((cx, cy)):
                violations.append(Violation("obstacle", r, float(t), segment=seg_idx))
                continue
            chord_idx = problems[r].chord_of_segment[seg_idx]
            a, b = problems[r].chords[chord_idx]
            if point_segment_distance((x, y), a, b) * res > corridor_halfwidth + DIST_TOL:
                violations.append(Violation("corridor", r, float(t), segment=seg_idx))

    n_rob = len(trajs)
    for i in range(n_rob):
        for j in range(i + 1, n_rob):
            d = np.linalg.norm(pos[i] - pos[j], axis=1) * res
            bad = np.flatnonzero(d < d_safe - DIST_TOL)
            if bad.size:
                # report at the deepest encroachment, not the first crossing:
                # repair targets the segment active where the pair is closest
                worst = bad[np.argmin(d[bad])]
                violations.append(
                    Violation("separation", i, float(ts[worst]), other=j)
                )
    return violations


MAX_SEGMENT_SCALINGS = 5
MAX_REPAIR_ROUNDS = 10
# slack for boundary-exact clearances: solver round-off must not flag a
# configuration that sits exactly on the safety limit
DIST_TOL = 1e-9


def _shave_segment(
    prob: SmoothingProblem, seg: int, scale_counts: dict
) -> None:
    """Pull one segment toward its chord: shrink its duration by 0.8, and after
    five shrinks insert the chord midpoint as an interpolated waypoint."""
    chord = prob.chord_of_segment[seg]
    key = (prob.robot, chord)
    if scale_counts.get(key, 0) < MAX_SEGMENT_SCALINGS:
        prob.durations[seg] *= 0.8
        scale_counts[key] = scale_counts.get(key, 0) + 1
    else:
        a, b = prob.chords[chord]
        mid = ((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)
        half = prob.durations[seg] / 2.0
        prob.waypoints.insert(seg + 1, mid)
        prob.durations[seg : seg + 1] = [max(half, T_FLOOR), max(half, T_FLOOR)]
        prob.chord_of_segment[seg : seg + 1] = [chord, chord]
        prob.rest_indices = {r + 1 if r > seg else r for r in prob.rest_indices}
        scale_counts[key] = 0


def _closing_robot(trajs, v: Violation) -> int:
    """The robot of the violating pair that is moving toward the other at the
    violation time (slowing it staggers the pair apart). Later id on ties."""
    i, j = v.robot, v.other
    ti = min(v.time, trajs[i].total_time)
    tj = min(v.time, trajs[j].total_time)
    pi, pj = trajs[i].eval(ti, 0), trajs[j].eval(tj, 0)
    vi, vj = trajs[i].eval(ti, 1), trajs[j].eval(tj, 1)
    u = pj - pi
    norm = float(np.hypot(u[0], u[1]))
    if norm == 0:
        return max(i, j)
    u = u / norm
    closing_i = float(np.dot(vi, u))  # i chasing j
    closing_j = float(np.dot(vj, -u))  # j chasing i
    if closing_i == closing_j:
        return max(i, j)
    return i if closing_i > closing_j else j


def _parks_on_route(problems: Sequence[SmoothingProblem], i: int, j: int, d_safe: float) -> bool:
    """Robot i's final waypoint lies within d_safe of one of robot j's chords,
    so a parked i blocks j's route and i's arrival must be delayed."""
    p = problems[i].waypoints[-1]
    return any(point_segment_distance(p, a, b) < d_safe for a, b in problems[j].chords)


def _start_blocks_route(problems: Sequence[SmoothingProblem], i: int, j: int, d_safe: float) -> bool:
    """Robot i's start lies within d_safe of robot j's chords, so j must wait
    for i to depart before entering that stretch."""
    p = problems[i].waypoints[0]
    return any(point_segment_distance(p, a, b) < d_safe for a, b in problems[j].chords)


def _hold_at_start(prob: SmoothingProblem, duration: float) -> None:
    """Delay a robot by parking it at its start before it moves, instead of
    slowing it down: the start cell is safe, crawling through a conflict
    zone is not."""
    w0 = prob.waypoints[0]
    if len(prob.waypoints) > 1 and prob.waypoints[1] == w0:
        prob.durations[0] += duration
        return
    prob.waypoints.insert(1, w0)
    prob.durations.insert(0, duration)
    prob.chords.insert(0, (w0, w0))
    prob.chord_of_segment = [0] + [c + 1 for c in prob.chord_of_segment]
    prob.rest_indices = {r + 1 for r in prob.rest_indices} | {1}


def repair(
    problems: Sequence[SmoothingProblem],
    violations: Sequence[Violation],
    scale_counts: dict,
    trajs: Sequence[PolynomialTrajectory] | None = None,
    d_safe: float = 1.0,
) -> bool:
    """Apply one repair round in place; returns True if anything changed.

    Corridor violations shrink the offending segment's duration by 0.8; after
    five shrinks the chord midpoint is inserted as a waypoint. Separation
    violations stagger the pair by scaling the closing robot's durations by
    1.25 (the later-id robot when no trajectories are supplied).
    """
    if not violations:
        return False
    changed = False
    corridor_done: set[tuple[int, int]] = set()
    pairs_done: set[tuple] = set()
    staggered: set[int] = set()
    for v in violations:
        if v.kind in ("corridor", "obstacle"):
            prob = problems[v.robot]
            chord = prob.chord_of_segment[v.segment]
            key = (v.robot, chord)
            if key in corridor_done:
                continue
            corridor_done.add(key)
            _shave_segment(prob, v.segment, scale_counts)
            changed = True
        elif v.kind == "separation":
            lo, hi = min(v.robot, v.other), max(v.robot, v.other)
            pair = ("pair", lo, hi)
            if pair in pairs_done:
                continue
            pairs_done.add(pair)

            if trajs is not None:
                # geometric case: a robot has drifted off its own chord at the
                # violation time (corner bulge), encroaching on a lane that is
                # safe chord-to-chord — pin the drifting robot's active
                # segment to its exact chord with full stops at its endpoints
                seg_of = {}
                dev = {}
                for r in (lo, hi):
                    t_r = min(v.time, trajs[r].total_time)
                    knots = trajs[r].times.knots
                    s = min(
                        max(int(np.searchsorted(knots, t_r, side="right")) - 1, 0),
                        len(problems[r].durations) - 1,
                    )
                    seg_of[r] = s
                    chord = problems[r].chords[problems[r].chord_of_segment[s]]
                    dev[r] = point_segment_distance(tuple(trajs[r].eval(t_r, 0)), *chord)
                worst = max((lo, hi), key=lambda r: dev[r])
                if dev[worst] > 0.01:
                    prob = problems[worst]
                    seg = seg_of[worst]
                    rests = {r for r in (seg, seg + 1) if 0 < r < len(prob.waypoints) - 1}
                    if rests - prob.rest_indices:
                        prob.rest_indices |= rests
                    else:
                        _shave_segment(prob, seg, scale_counts)
                    changed = True
                    continue

            # timing conflict: stagger the pair by slowing exactly one robot,
            # and keep slowing that same robot on recurrence so the stagger
            # accumulates instead of oscillating between the two
            if pair in scale_counts:
                prev, tries, sticky = scale_counts[pair]
                if sticky or tries < 4:
                    mover = prev
                    scale_counts[pair] = (prev, tries + 1, sticky)
                else:
                    mover = hi if prev == lo else lo
                    scale_counts[pair] = (mover, 0, False)
            else:
                lo_parks = _parks_on_route(problems, lo, hi, d_safe)
                hi_parks = _parks_on_route(problems, hi, lo, d_safe)
                lo_blocks = _start_blocks_route(problems, lo, hi, d_safe)
                hi_blocks = _start_blocks_route(problems, hi, lo, d_safe)
                sticky = True
                if lo_parks and not hi_parks:
                    mover = lo  # lo ends up on hi's route: delay its arrival
                elif hi_parks and not lo_parks:
                    mover = hi
                elif lo_blocks and not hi_blocks:
                    mover = hi  # hi's route passes lo's start: hi waits
                elif hi_blocks and not lo_blocks:
                    mover = lo
                elif trajs is not None:
                    mover = _closing_robot(trajs, v)
                    sticky = False
                else:
                    mover = hi
                    sticky = False
                scale_counts[pair] = (mover, 0, sticky)
            if mover in staggered:
                continue
            staggered.add(mover)
            other = hi if mover == lo else lo
            if _parks_on_route(problems, mover, other, d_safe) or _start_blocks_route(
                problems, other, mover, d_safe
            ):
                _hold_at_start(problems[mover], 0.5 * sum(problems[other].durations))
            else:
                problems[mover].durations = [d * 1.25 for d in problems[mover].durations]
            changed = True
    return changed


def smooth_and_validate(
    problems: Sequence[SmoothingProblem],
    grid: OccupancyGrid,
    d_safe: float = 1.0,
    corridor_halfwidth: float = 1.0,
    dt: float = 0.05,
    max_rounds: int = MAX_REPAIR_ROUNDS,
    degree: int = DEFAULT_DEGREE,
) -> list[PolynomialTrajectory]:
    """Solve, validate, and repair until feasible or the round limit."""
    scale_counts: dict = {}
    for _ in range(max_rounds + 1):
        trajs = [p.solve(degree) for p in problems]
        report = validate(trajs, grid, problems, d_safe, corridor_halfwidth, dt)
        if not report:
            return trajs
        repair(problems, report, scale_counts, trajs, d_safe)
    raise UnrepairableError(
        f"{len(report)} violation(s) remain after {max_rounds} repair rounds"
    )
