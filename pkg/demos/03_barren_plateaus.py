"""
Noise-induced barren plateaus
=============================

Gradients of a layered ansatz vanish exponentially with depth under local
Pauli noise.  With q_y = 0 the y-rotation ansatz keeps its signal much longer
than the x-rotation one.  Desk scale: n=6 and 200 samples (the full sweep is
``metanoise nibp``).
"""
import numpy as np

from metanoise.experiments import nibp_sweep

layers = [5, 10, 20, 30, 40]
rows = nibp_sweep(6, layers, ["x", "y"], (0.5, 0.0, 0.5), samples=200, seed=1)
print(f"{'axis':>4} {'L':>3} {'mean |grad|':>12} {'mean dist':>12} {'ideal dist':>11}")
for r in rows:
    print(f"{r.axis:>4} {r.layers:>3} {r.mean_grad:12.3e} {r.mean_distance:12.3e} {r.mean_ideal_distance:11.3f}")

for axis in "xy":
    g = [r.mean_grad for r in rows if r.axis == axis]
    slope = np.polyfit(layers, np.log(g), 1)[0]
    print(f"axis {axis}: log |grad| falls by {-slope:.2f} per layer")
