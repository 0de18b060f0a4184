"""
Which way is safer
==================

The vector form of the index points the robot along the steepest increase
of collective safety and has length equal to the collective value.
"""

import math

import numpy as np

from safetyindex import Pose2, SafetyParams, gsi_gradient
from safetyindex.gsi import WorldHuman, analytic_gradient

p = SafetyParams()
humans = [WorldHuman(2.0, 1.0), WorldHuman(2.0, -1.0), WorldHuman(4.0, 0.0, 0.8)]

# Draw a coarse arrow map of the field for a robot heading +x.
arrows = "→↗↑↖←↙↓↘"
print("robot positions x in [-1, 3], y in [-2, 2]; H marks a human")
for y in np.linspace(2, -2, 9):
    row = ""
    for x in np.linspace(-1, 3, 17):
        if any(math.hypot(h.x - x, h.y - y) < 0.3 for h in humans):
            row += "H"
            continue
        vec = gsi_gradient(Pose2(x, y, 0.0), humans, p)
        if vec.flat:
            row += "·"
        else:
            k = int(round(math.atan2(vec.vector[1], vec.vector[0]) / (math.pi / 4))) % 8
            row += arrows[k]
    print(row)

# The finite-difference field agrees with the chain-rule gradient.
robot = Pose2(0.5, 0.2, 0.1)
vec = gsi_gradient(robot, humans, p)
print("\nfinite difference:", vec.gradient, "step", vec.step)
print("analytic:         ", analytic_gradient(robot, humans, p))
print("|vector| =", np.linalg.norm(vec.vector), " collective =", vec.value)
