"""Grid-line geometry (supercover traversal, segment intersection) and
waypoint pruning of discrete paths."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

from .grid import Cell, OccupancyGrid

if TYPE_CHECKING:
    from .mrf import DiscretePath


def supercover_cells(a: Cell, b: Cell) -> list[Cell]:
    """Every cell the closed segment between the centers of `a` and `b`
    touches, including cells met only at a corner. Conservative superset of
    Bresenham."""
    x0, y0 = int(a[0]), int(a[1])
    x1, y1 = int(b[0]), int(b[1])
    dx, dy = x1 - x0, y1 - y0
    xstep = 1 if dx > 0 else -1
    ystep = 1 if dy > 0 else -1
    dx, dy = abs(dx), abs(dy)
    cells = [Cell(x0, y0)]
    ddx, ddy = 2 * dx, 2 * dy
    x, y = x0, y0
    if dx >= dy:
        errorprev = error = dx
        for _ in range(dx):
            x += xstep
            error += ddy
            if error > ddx:
                y += ystep
                error -= ddx
                if error + errorprev < ddx:
                    cells.append(Cell(x, y - ystep))
                elif error + errorprev > ddx:
                    cells.append(Cell(x - xstep, y))
                else:
                    # exact corner crossing: take both adjacent cells
                    cells.append(Cell(x, y - ystep))
                    cells.append(Cell(x - xstep, y))
            cells.append(Cell(x, y))
            errorprev = error
    else:
        errorprev = error = dy
        for _ in range(dy):
            y += ystep
            error += ddx
            if error > ddy:
                x += xstep
                error -= ddy
                if error + errorprev < ddy:
                    cells.append(Cell(x - xstep, y))
                elif error + errorprev > ddy:
                    cells.append(Cell(x, y - ystep))
                else:
                    cells.append(Cell(x - xstep, y))
                    cells.append(Cell(x, y - ystep))
            cells.append(Cell(x, y))
            errorprev = error
    return cells


def line_of_sight(grid: OccupancyGrid, a: Cell, b: Cell) -> bool:
    """True iff every supercover cell of the segment a->b is in bounds and free."""
    for c in supercover_cells(a, b):
        if not grid.in_bounds(c) or not grid.is_free(c):
            return False
    return True


def _orient(p, q, r) -> float:
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _within_bbox(p, a, b) -> bool:
    return (
        min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


def point_segment_distance(p, a, b) -> float:
    """Euclidean distance from point p to the closed segment a-b."""
    ax, ay = a
    bx, by = b
    px, py = p
    vx, vy = bx - ax, by - ay
    norm2 = vx * vx + vy * vy
    if norm2 == 0:
        return math.hypot(px - ax, py - ay)
    u = max(0.0, min(1.0, ((px - ax) * vx + (py - ay) * vy) / norm2))
    return math.hypot(px - (ax + u * vx), py - (ay + u * vy))


def segments_intersect(a1, a2, b1, b2) -> bool:
    """Closed-segment intersection test (shared endpoints count).

    Handles degenerate (point) segments and collinear overlap.
    """
    o1 = _orient(a1, a2, b1)
    o2 = _orient(a1, a2, b2)
    o3 = _orient(b1, b2, a1)
    o4 = _orient(b1, b2, a2)
    if ((o1 > 0) != (o2 > 0)) and ((o3 > 0) != (o4 > 0)) and o1 != 0 and o2 != 0 and o3 != 0 and o4 != 0:
        return True
    if o1 == 0 and _within_bbox(b1, a1, a2):
        return True
    if o2 == 0 and _within_bbox(b2, a1, a2):
        return True
    if o3 == 0 and _within_bbox(a1, b1, b2):
        return True
    if o4 == 0 and _within_bbox(a2, b1, b2):
        return True
    return False


@dataclass(frozen=True)
class PrunedPath:
    """Waypoint subsequence of a discrete path; `source_steps` indexes each
    retained waypoint back into the original step sequence."""

    robot: int
    waypoints: tuple[Cell, ...]
    source_steps: tuple[int, ...]


@dataclass(frozen=True)
class _Chord:
    robot: int
    step_a: int
    step_b: int
    cell_a: Cell
    cell_b: Cell


def _ranges_overlap(a0: int, a1: int, b0: int, b1: int) -> bool:
    return a0 <= b1 and b0 <= a1


def _step_conflict(a, b, sa, sb, robot, paths, source_steps) -> bool:
    """Candidate chord a-b (steps sa..sb) against other robots' raw step
    segments: a robot holding its cell demands full safety clearance from
    the chord, a moving robot demands non-crossing."""
    for q, qsteps in zip(paths, source_steps):
        if q.robot == robot:
            continue
        for t in range(len(qsteps) - 1):
            if not _ranges_overlap(sa, sb, qsteps[t], qsteps[t + 1]):
                continue
            c0, c1 = q.cells[t], q.cells[t + 1]
            if c0 == c1:
                if point_segment_distance(c0, a, b) < 1.0:
                    return True
            elif segments_intersect(a, b, c0, c1):
                return True
    return False


def prune(
    paths: Sequence["DiscretePath"],
    grid: OccupancyGrid,
    horizon_len: int,
    source_steps: Sequence[Sequence[int]] | None = None,
) -> list[PrunedPath]:
    """Greedy chord pruning within horizon windows.

    Per window, per robot in ascending id: repeatedly extend the chord from
    the current anchor to the farthest later waypoint that keeps line of
    sight and does not intersect any earlier robot's chord with an
    overlapping step range. Consecutive original waypoints are always an
    admissible fallback, so the result never gains waypoints.

    `source_steps` lets an already pruned path be re-pruned against the same
    window boundaries (defaults to 0..T).
    """
    if horizon_len < 1:
        raise ValueError("horizon_len must be at least 1")
    if not paths:
        return []
    if source_steps is None:
        source_steps = [list(range(len(p.cells))) for p in paths]

    last_step = max(steps[-1] for steps in source_steps)
    boundaries = list(range(0, last_step, horizon_len)) + [last_step]

    results: list[PrunedPath] = []
    kept: list[list[int]] = [[0] for _ in paths]  # retained indices per path
    for w in range(len(boundaries) - 1):
        lo, hi = boundaries[w], boundaries[w + 1]
        window_chords: list[_Chord] = []
        for p, steps, keep in zip(paths, source_steps, kept):
            idx_in = [k for k, s in enumerate(steps) if lo <= s <= hi]
            anchor = idx_in[0]
            while anchor != idx_in[-1]:
                pos_a = anchor
                chosen = None
                for j in reversed(idx_in[idx_in.index(pos_a) + 1 :]):
                    if not line_of_sight(grid, p.cells[pos_a], p.cells[j]):
                        continue
                    conflict = any(
                        _ranges_overlap(steps[pos_a], steps[j], ch.step_a, ch.step_b)
                        and segments_intersect(p.cells[pos_a], p.cells[j], ch.cell_a, ch.cell_b)
                        for ch in window_chords
                        if ch.robot != p.robot
                    ) or _step_conflict(
                        p.cells[pos_a], p.cells[j], steps[pos_a], steps[j],
                        p.robot, paths, source_steps,
                    )
                    if not conflict:
                        chosen = j
                        break
                if chosen is None:
                    # the original single step is accepted unconditionally
                    chosen = idx_in[idx_in.index(pos_a) + 1]
                window_chords.append(
                    _Chord(p.robot, steps[pos_a], steps[chosen], p.cells[pos_a], p.cells[chosen])
                )
                if keep[-1] != chosen:
                    keep.append(chosen)
                anchor = chosen

    for p, steps, keep in zip(paths, source_steps, kept):
        if len(keep) == 1:
            # stationary robot: keep a degenerate two-point path
            keep = [keep[0], keep[0]]
        results.append(
            PrunedPath(
                robot=p.robot,
                waypoints=tuple(p.cells[k] for k in keep),
                source_steps=tuple(steps[k] for k in keep),
            )
        )
    return results
