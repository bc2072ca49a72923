"""
Two robots settling to their interaction equilibrium
====================================================

Two robots in empty space, no goal: the pair potential pulls them together
at long range and pushes them apart at short range, so coordinate descent
walks them to the lattice separation closest to the continuous equilibrium.
"""

import math

import numpy as np

from swarmplan.fields import InteractionParams, equilibrium_distance, interaction_energy
from swarmplan.grid import OccupancyGrid
from swarmplan.mrf import OptimizeConfig, make_state, optimize

params = InteractionParams()
print(f"continuous equilibrium distance: {equilibrium_distance(params):.4f} cells")

# the best *integer* separation, by direct scan
lattice = min(range(1, 31), key=lambda d: interaction_energy((0, 0), (d, 0), params))
print(f"best lattice separation:         {lattice} cells")

grid = OccupancyGrid(prob=np.zeros((20, 60)), resolution=1.0)
state = make_state([(20, 10), (40, 10)], grid, k=1)

paths, trace = optimize(
    state, grid, None, params, OptimizeConfig(k=1, search_order=4, max_sweeps=200)
)

a, b = (p.cells[-1] for p in paths)
sep = math.hypot(a[0] - b[0], a[1] - b[1])
print(f"converged in {trace.iterations} sweeps ({trace.status})")
print(f"final positions {tuple(a)} and {tuple(b)}, separation {sep:.4f}")

for i, e in enumerate(trace.energies):
    print(f"  sweep {i:3d}  energy {e:.6f}")
