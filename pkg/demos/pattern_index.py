"""
Periodic patterns of a Duffing-type potential: orbit closure, the
constraint levels I_mu and the index of dk/dI.

Run:  python demos/pattern_index.py
"""

import numpy as np

from multisym import (constraint_levels, find_periodic_orbit, hessian_index,
                      nonlinear_wave, particle, reduce_diagonal)

"""
PART I: oscillator, V'(q) = -q + gamma q^3
"""
for gam, label in [(-0.5, "hardening"), (0.5, "softening")]:
    L = particle(1, f"duffing(-1, {gam})")
    red = reduce_diagonal(L, [1.0])
    print(f"gamma = {gam} ({label})")
    for A in (0.2, 0.6, 1.0):
        orb = find_periodic_orbit(red, A)
        I = constraint_levels(orb)[0]
        print(f"  A = {A:.1f}: omega = {orb.k[0]:.10f}, I = {I:.10f}, closure {orb.closure_error:.1e}")
    rep = hessian_index(L, [1.0], 0.8)
    print(f"  d omega / dI at A = 0.8: {rep.hessian[0, 0]:+.6f}, index {rep.index}")

"""
PART II: travelling wave phi = f(k0 t + k1 x) of the 1+1 wave equation
"""
L = nonlinear_wave(1, 1, "duffing(-1, 0.5)")
rep = hessian_index(L, [1.0, 0.3], 0.8)
print("k =", rep.k, " I =", rep.I)
print("dk/dI =\n", rep.hessian)
print("det = %.6g, index = %d, relative asymmetry = %.1e" % (rep.determinant, rep.index,
                                                            rep.asymmetry))
print("linear Klein-Gordon degenerate:",
      hessian_index(nonlinear_wave(1, 1, "klein_gordon(1)"), [1.5, 0.5], 1.0).degenerate)
