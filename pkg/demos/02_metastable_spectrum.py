"""
Spectrum of a weakly driven dephasing qubit
===========================================

A small transverse field on top of strong dephasing opens a wide gap between
one slow mode and the fast ones: the slow sector is the metastable manifold.
"""
import numpy as np

from metanoise.liouvillian import (
    Liouvillian,
    build_superoperator,
    evolve_spectral,
    metastable_manifold,
    spectral_decomposition,
)

gen = Liouvillian.from_paulis(1, {"X": 0.02}, [("Z", 1.0)])
spec = spectral_decomposition(build_superoperator(gen))
print("eigenvalues:", np.round(spec.eigenvalues, 6))

man = metastable_manifold(spec, 10.0)
print("metastable indices:", man.indices, "gap ratio:", man.gap_ratio)

# populations relax on the slow time scale, coherences die on the fast one
rho0 = np.diag([1.0, 0.0])
for t in (0.0, 1.0, 10.0, 100.0, 1000.0):
    rho = evolve_spectral(spec, rho0, t)
    print(f"t={t:7.1f}  p0={rho[0, 0].real:.4f}  |coh|={abs(rho[0, 1]):.2e}")
