"""
Resilience index and its Clifford-tracking bound
================================================

The exact index minimises accumulated log-eigenvalues over every surviving
path of the Pauli expansion.  The bound only follows the Clifford part of the
circuit, so any rotation angles give the same number.
"""
import numpy as np

from metanoise.circuit import build_hea
from metanoise.liouvillian import PauliChannel
from metanoise.pauli import PauliVector
from metanoise.resilience import (
    StabilizerState,
    circuit_bound,
    hea_min_multiplicity,
    lambda_m_exact,
    sm_recurrence,
)

rng = np.random.default_rng(0)
n, L = 4, 3

# with q_y = 0 both ansatz flavours hit -inf
erasing = PauliChannel.local(n, 0.5, 0.0, 0.5)
for axis in "xy":
    c = build_hea(n, L, axis, rng.uniform(0, 2 * np.pi, (L, n)), erasing)
    r = lambda_m_exact(c, PauliVector.zero_state(n))
    print(f"axis {axis}: index {r.lambda_m}, multiplicity {r.multiplicity}")

# finite noise: exact index against the bound
soft = PauliChannel.local(n, 0.8, 0.6, 0.7)
for _ in range(3):
    c = build_hea(n, L, "y", rng.uniform(0, 2 * np.pi, (L, n)), soft)
    exact = lambda_m_exact(c, PauliVector.zero_state(n)).lambda_m
    bound = circuit_bound(c, StabilizerState.from_bitstring("0" * n))
    print(f"exact {exact:.4f}  bound {bound:.4f}")

for k in (3, 5, 8):
    print(f"n={k}: a_n={sm_recurrence(k)}, 3^n - a_n={hea_min_multiplicity(k, 'y')}")
