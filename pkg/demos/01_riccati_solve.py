"""Solve the Riccati equation for a small spin bath and block-diagonalize H_QE.

Run: python3 demos/01_riccati_solve.py
"""

import numpy as np

from riccati_qubit import ModelParams, block_diagonalize, build_hqe, riccati_residual_linear, solve_commuting, spin_bath
from riccati_qubit.riccati import riccati_spectrum

env = spin_bath(omegas=[1.0, 0.4], couplings=[0.3, -0.15])
params = ModelParams(alpha=0.6, beta=0.2)
h = build_hqe(params, env)

for branch in ("positive", "negative"):
    sol = solve_commuting(env, params, branch)
    x = sol.matrix()
    res = np.linalg.norm(riccati_residual_linear(h, x))
    print(f"{branch:>8} branch  x_n = {np.round(sol.x, 6)}  ||R[X]|| = {res:.1e}")

sol = solve_commuting(env, params)
bd = block_diagonalize(h, sol.matrix())
print("off-diagonal blocks after S_X^-1 H S_X:", f"{np.linalg.norm(bd.b):.1e}", f"{np.linalg.norm(bd.c):.1e}")

hp, hm = riccati_spectrum(sol)
dense = np.linalg.eigvalsh(h.flatten())
print("Riccati spectrum:", np.round(np.sort(np.concatenate([hp, hm])), 6))
print("dense spectrum:  ", np.round(dense, 6))
