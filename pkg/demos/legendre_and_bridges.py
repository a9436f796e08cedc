"""
Legendre transform, covariant Hamiltonian and Bridges' matrices for the
1+1 nonlinear wave equation.

Run:  python demos/legendre_and_bridges.py
"""

import numpy as np

from multisym import (FieldSpec, JetPoint, assemble_structure_matrices, equivalence_check,
                      hamiltonian, hamiltonian_partials, legendre, nonlinear_wave,
                      random_patch)
from multisym.integrate import exact_solution
from multisym.multihamiltonian import bridges_form_residual, ddw_residual

# Klein-Gordon: L = (phi_t^2 - phi_x^2)/2 + V(phi), V = -phi^2/2
L = nonlinear_wave(1, 1, "klein_gordon(1)")

"""
PART I: one jet through the Legendre map
"""
jet = JetPoint.make(L.spec, x=[0.0, 0.0], y=[0.5], v=[[2.0, 1.0]])
z = legendre(L, jet)
print("p^mu       =", z.p.ravel())          # (phi_t, -phi_x)
print("affine p   =", z.p_affine)
print("H          =", hamiltonian(L, z))
dHy, dHp = hamiltonian_partials(L, z)
print("dH/dp      =", dHp.ravel(), " (recovers v)")
print("dH/dphi    =", dHy)

"""
PART II: Bridges' M and K, and the first-order system on a plane wave
"""
M, K = assemble_structure_matrices(FieldSpec(1, 1)).matrices
print("M =\n", M)
print("K =\n", K)

wave = exact_solution("kg_plane_wave", {"A": 1.0, "k": 1.0, "m": 1.0})
for x in ([0.0, 0.0], [1.3, -0.4]):
    r = ddw_residual(L, wave, x)
    b = bridges_form_residual(L, wave, x)
    print(f"x={x}: |r_y|={r.norm_y:.1e} |r_p|={r.norm_p:.1e} |M Z_t + K Z_x - grad H|="
          f"{np.max(np.abs(b)):.1e}")

"""
PART III: away from solutions the two residuals still agree
"""
rng = np.random.default_rng(0)
worst = 0.0
for _ in range(50):
    rep = equivalence_check(L, random_patch(L.spec, rng), rng.uniform(-2, 2, (2, 2)))
    worst = max(worst, rep.max_sum)
print("max |r_y + E| over 50 random patches:", worst)
