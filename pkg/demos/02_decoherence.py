"""Reduced qubit dynamics and its Kraus form on a spin bath.

The qubit starts in |+>; the bath is maximally mixed. Prints the coherence
|rho_01|, the purity and the local-unitarity defect of U_t over time.

Run: python3 demos/02_decoherence.py
"""

import numpy as np

from riccati_qubit import (
    JointState,
    ModelParams,
    QubitState,
    kraus_apply,
    kraus_family,
    local_unitarity_defect,
    reduced_dynamics,
    solve_commuting,
    spin_bath,
)

env = spin_bath([1.0, 0.55, 0.3], [0.4, -0.25, 0.15])
params = ModelParams(alpha=0.5, beta=0.1)
sol = solve_commuting(env, params)

rho_q = QubitState.from_bloch([1, 0, 0]).rho
rho_e = np.eye(env.dim) / env.dim
joint = JointState.product(rho_q, rho_e)

print("   t   |rho_01|   purity   defect   kraus-vs-full")
for t in np.linspace(0, 8, 9):
    full = reduced_dynamics(joint, sol, params, t)
    fam = kraus_family(rho_e, sol, params, t)
    via_kraus = kraus_apply(fam, rho_q)
    gap = np.linalg.norm(full.rho - via_kraus.rho)
    print(f"{t:5.1f}  {abs(full.coherence):8.5f}  {full.purity:7.5f}  {local_unitarity_defect(sol, params, t):7.4f}   {gap:.1e}")
