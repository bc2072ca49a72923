"""
Smoothing a waypoint polyline into a minimum-snap trajectory
============================================================

A handful of 2D waypoints are interpolated by piecewise degree-7
polynomials that minimize the integral of the squared fourth derivative,
with derivatives up to order four continuous at every interior waypoint
and the ends clamped to rest.
"""

import numpy as np

from swarmplan.trajopt import allocate_times, min_snap, qp_objective, sample

waypoints = np.array(
    [[2.0, 2.0], [8.0, 3.0], [12.0, 8.0], [9.0, 13.0], [3.0, 12.0]]
)
times = allocate_times(waypoints, v_nominal=1.5)
print("segment durations:", np.round(times.durations, 3))

traj = min_snap(waypoints, times)
print(f"snap objective: {qp_objective(traj):.6f}")

# the trajectory passes through every waypoint...
for w, t in zip(waypoints, times.knots):
    p = traj.eval(t)
    print(f"  t={t:7.3f}  target {w}  reached ({p[0]:.6f}, {p[1]:.6f})")

# ...and starts/ends at rest
print("start velocity:", np.round(traj.eval(0.0, 1), 9))
print("end   velocity:", np.round(traj.eval(traj.total_time, 1), 9))

# sampled speed profile
s = sample(traj, dt=0.25)
speed = np.linalg.norm(s.vel, axis=1)
for t, v in zip(s.t[::4], speed[::4]):
    bar = "#" * int(20 * v / max(speed.max(), 1e-9))
    print(f"  t={t:6.2f}  |{bar:<20}| {v:.3f}")
