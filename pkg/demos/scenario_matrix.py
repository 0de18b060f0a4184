"""
Which scale reads which situation correctly
===========================================

Six (distance, closing speed) situations, labelled A to F by where the robot
would come to rest, scored by the index and four older scales.
"""

from safetyindex import appropriateness_matrix, classify_scenario
from safetyindex.scenario import REPRESENTATIVE_STATES, deviations

for sid, (d, v) in REPRESENTATIVE_STATES.items():
    lab = classify_scenario(d, v)
    print(f"{sid}: d={d:4.2f} m v={v:+.1f} m/s stops at {lab.stopping_point:5.2f} m "
          f"-> {lab.appropriate.value}")

# Single-human (SH) cells use the state alone, multi-human (MH) cells add two
# safe bystanders and aggregate.  DI has no multi-human form.
m = appropriateness_matrix()
print()
print(m.grid())

# Cells where these reconstructions disagree with the reference pattern.
print("\ndeviations:", deviations(m))
for (sid, scale, mode) in deviations(m):
    print(f"  {sid} {scale} {mode}: value {m.values[(sid, scale, mode)]:.3f}")
