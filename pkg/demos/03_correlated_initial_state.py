"""Dynamics from an initially correlated qubit-environment state.

The state is sum_ij gamma_ij rho_Q^i (x) rho_E^j with a 2x2 coefficient grid.
The per-eigenvector formula is compared with the full 2d x 2d evolution.

Run: python3 demos/03_correlated_initial_state.py
"""

import numpy as np

from riccati_qubit import JointState, ModelParams, correlated_dynamics, reduced_dynamics, solve_commuting, spin_bath

env = spin_bath([0.9, 0.4], [0.35, -0.2])
params = ModelParams(alpha=0.6, beta=0.3)
sol = solve_commuting(env, params)

gamma = np.array([[0.45, 0.05], [0.05, 0.45]])
rho_qs = [np.diag([1.0, 0.0]), 0.5 * np.ones((2, 2))]
rho_es = [np.diag([0.7, 0.1, 0.1, 0.1]), np.diag([0.1, 0.2, 0.3, 0.4])]
joint = JointState.structured(gamma, rho_qs, rho_es)

for t in (0.0, 1.0, 2.5, 5.0):
    fast = correlated_dynamics(gamma, rho_qs, rho_es, sol, params, t)
    full = reduced_dynamics(joint, sol, params, t)
    print(f"t={t:3.1f}  bloch={np.round(fast.bloch, 5)}  |difference|={np.linalg.norm(fast.rho - full.rho):.1e}")
