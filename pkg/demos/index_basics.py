"""
Per-human and collective safety index
=====================================

How the index reacts to distance, closing speed, bearing, the kernel
exponent rho and the smooth-minimum temperature tau.
"""

import math

import numpy as np

from safetyindex import SafetyParams, gsi_collective, gsi_directional, gsi_hat
from safetyindex.gsi import gsi_hat_array

p = SafetyParams()

# A human standing still at the edge of the social zone is fully safe, one at
# the edge of the intimate zone is not safe at all.
print("d=3.70 v=0  ->", gsi_hat(3.7, 0.0).clamped)
print("d=0.46 v=0  ->", gsi_hat(0.46, 0.0).clamped)

# Closing speed eats into the margin through the stopping distance v|v|/(2 a_max).
for v in (-1.0, 0.0, 0.5, 1.0, 1.5):
    print(f"d=3.0 v={v:+.1f} -> {gsi_hat(3.0, v).clamped:.3f}")

# Bearing: only a robot pointed at the human gets the full penalty.
g = gsi_hat(2.0, 0.5).clamped
for deg in (0, 30, 60, 90, 180):
    print(f"bearing {deg:3d} deg -> {gsi_directional(g, math.radians(deg)):.3f}")

# rho bends the curve: >1 is cautious, <1 permissive.
d = np.linspace(p.d_min, p.d_max, 7)
for rho in (0.5, 1.0, 2.0):
    row = gsi_hat_array(d, 0.0, SafetyParams(rho=rho))
    print(f"rho={rho:<3}", np.round(row, 3))

# tau moves the collective value from the minimum toward the mean.
values = [0.7, 0.9, 0.4]
for tau in (1e-3, 1e-2, 1e-1, 1.0, 10.0):
    print(f"tau={tau:<6} collective={gsi_collective(values, tau):.4f}")
print("mean of the three:", round(sum(values) / 3, 4))
