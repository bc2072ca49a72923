"""
Rendering the energy landscape
==============================

The static field a robot descends is the sum of an exponential goal
attractor and a Gaussian-smoothed obstacle field; adding the pairwise
interaction of the robots themselves gives the full landscape. This demo
prints a coarse ASCII heat map of both.
"""

import numpy as np

from swarmplan.cli import ScenarioConfig, build_scenario
from swarmplan.fields import render_combined_field, zero_field


def ascii_map(field, step=2):
    v = field.value[::step, ::step]
    lo, hi = v.min(), v.max()
    shades = " .:-=+*#%@"
    rows = []
    for row in v:
        idx = ((row - lo) / max(hi - lo, 1e-12) * (len(shades) - 1)).astype(int)
        rows.append("".join(shades[i] for i in idx))
    return "\n".join(rows)


scenario, cfg = build_scenario(ScenarioConfig(scenario="corridor", seed=0))
static = scenario.static if scenario.static is not None else zero_field(scenario.grid)

print("static field (goal attractor + inflated obstacles):")
print(ascii_map(static))

combined = render_combined_field(static, scenario.start, scenario.iparams)
print("\nwith the robots' own interaction terms added:")
print(ascii_map(combined))

print(f"\nfield range: {static.value.min():.2f} .. {static.value.max():.2f}")
print("goal:", scenario.goal, " robots:", [tuple(c) for c in scenario.start])
