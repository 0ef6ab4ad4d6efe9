"""Parse STL formulas, evaluate traces, and read robustness scores.

The robustness metric is sound: a positive score always means the boolean
semantics are satisfied, a negative score always means they are violated,
and the magnitude tells you by how much. Conjunctions and time windows mix
geometric means (when everything holds) with arithmetic means of the
violations (when something fails).
"""

import numpy as np

from stlsurrogate import Trace, agm_rob, bool_sat, parse_formula, pretty_print

# A reaching requirement: get within 5 cm of the target inside one second.
# Raw distances are metres, so clamp(...) maps [0, 0.5] m onto [-1, 1]
# before comparing; 5 cm lands at -0.8 on that scale.
formula = parse_formula(
    "ev[0,1] (clamp(norm(r.x - c.x, r.y - c.y), 0, 0.5) <= -0.8)"
)

# A gripper closing on a cube at (0.3, 0.2), sampled at 20 Hz.
steps = 24
t = np.arange(steps) * 0.05
trace = Trace(
    {
        "r.x": np.minimum(t * 0.8, 0.3),
        "r.y": np.minimum(t * 0.55, 0.2),
        "c.x": np.full(steps, 0.3),
        "c.y": np.full(steps, 0.2),
    },
    dt=0.05,
)

print("formula:", pretty_print(formula))
print("satisfied:", bool_sat(formula, trace, 0))
print("robustness:", agm_rob(formula, trace, 0))

# Slow the gripper down and the margin shrinks; far too slow and the sign
# flips together with the boolean verdict.
for speed in (1.0, 0.6, 0.35, 0.2):
    tr = Trace(
        {
            "r.x": np.minimum(t * 0.8 * speed, 0.3),
            "r.y": np.minimum(t * 0.55 * speed, 0.2),
            "c.x": np.full(steps, 0.3),
            "c.y": np.full(steps, 0.2),
        },
        dt=0.05,
    )
    print(
        f"speed x{speed}: robustness {agm_rob(formula, tr, 0):+.4f} "
        f"(satisfied={bool_sat(formula, tr, 0)})"
    )
