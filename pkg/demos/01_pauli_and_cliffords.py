"""
Pauli strings and Clifford conjugation
======================================

Pauli strings carry symplectic bits and a phase; Clifford gates act on them
through tableaus without ever forming a matrix.
"""
import itertools

import numpy as np

from metanoise.pauli import CliffordTableau, PauliString, conjugate, decompose, support

x, z = PauliString.from_label("X"), PauliString.from_label("Z")
print("X Z =", x * z)

# CZ on every two-qubit string, checked against the dense 4x4 product
cz = CliffordTableau.cz(0, 1, 2)
u = np.diag([1, 1, 1, -1])
for lab in ("".join(t) for t in itertools.product("IXYZ", repeat=2)):
    p = PauliString.from_label(lab)
    img = conjugate(cz, p)
    assert np.allclose(img.to_matrix(), u @ p.to_matrix() @ u)
    print(f"CZ {lab} CZ = {img}")

# a pure state and its Pauli support
rho = np.zeros((8, 8))
rho[0, 0] = 1
print("support of |000>:", sorted(p.letters for p in support(decompose(rho))))
