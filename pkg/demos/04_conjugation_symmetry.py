"""Complex conjugation K as an antilinear solution of the Riccati equation.

For real-symmetric H_E and V both residual parts vanish, even when the pair
does not commute. For a complex Hermitian H_E the antilinear part equals
H_E^T - H_E.

Run: python3 demos/04_conjugation_symmetry.py
"""

import numpy as np

from riccati_qubit import AntilinearMap, EnvironmentPair, ModelParams, build_hbar, build_ht, riccati_residual_antilinear

rng = np.random.default_rng(0)
a = rng.normal(size=(3, 3))
b = rng.normal(size=(3, 3))
params = ModelParams(alpha=0.8, beta=-0.3)
k = AntilinearMap.conjugation(3)

real_pair = EnvironmentPair(a + a.T, b + b.T)
print("real-symmetric pair, commuting:", real_pair.commuting)
for name, h in (("H_t(t=1.5)", build_ht(1.5, params, real_pair)), ("H_bar", build_hbar(params, real_pair)[1])):
    lin, anti = riccati_residual_antilinear(h, k)
    print(f"  {name:11} linear {np.linalg.norm(lin):.1e}  antilinear {np.linalg.norm(anti):.1e}")

c = a + 1j * b
complex_pair = EnvironmentPair(c + c.conj().T, b + b.T)
lin, anti = riccati_residual_antilinear(build_ht(1.5, params, complex_pair), k)
h_e = complex_pair.h_e.matrix
print("complex H_E: ||antilinear part|| =", f"{np.linalg.norm(anti):.6f}", " ||H_E^T - H_E|| =", f"{np.linalg.norm(h_e.T - h_e):.6f}")
