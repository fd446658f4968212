"""
Analog protocols under anisotropic noise
========================================

Three small experiments: a qubit flip about x or y under mostly-x noise,
adiabatic W-state preparation from two initial Hamiltonians, and a
two-qubit forward/reverse anneal.
"""
import numpy as np

from metanoise.analog import Schedule, anneal, asp_w_state, relative_error, single_qubit_flip, w_state

for axis in "xy":
    rho, _ = single_qubit_flip(axis, gamma_x=1.0, eps=0.01)
    print(f"flip about {axis}: <1|rho|1> = {rho[1, 1].real:.4f}")

w = w_state(5)
for init in "zx":
    for gamma in (0.0, 0.004, 0.1):
        traj = asp_w_state(5, init, T=100.0, gamma=gamma, samples=201)
        F = traj.fidelity(w)
        k = int(np.argmax(F))
        print(f"W prep init={init} gamma={gamma:<5}: peak F {F[k]:.3f} at t={traj.times[k]:5.1f}, final {F[-1]:.3f}")

E_fwd, _ = anneal(Schedule.forward(500.0))
E_rev, _ = anneal(Schedule.reverse(100.0))
E_noisy, _ = anneal(Schedule.reverse(100.0), gammas=(0.001, 0.0, 0.0))
print(f"forward E={E_fwd:.4f}, reverse E={E_rev:.4f}")
print(f"reverse with x noise E={E_noisy:.4f}, relative error {relative_error(E_noisy, E_rev):.2f}%")
