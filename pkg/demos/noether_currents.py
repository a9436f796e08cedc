"""
Noether currents of the Klein-Gordon field on an exact plane wave, plus the
particle-mechanics special case.

Run:  python demos/noether_currents.py
"""

import numpy as np

from multisym import (SymmetryGenerator, divergence_residual, nonlinear_wave, particle,
                      particle_noether)
from multisym.integrate import exact_solution

kg = nonlinear_wave(1, 1, "klein_gordon(1)")
wave = exact_solution("kg_plane_wave", {"A": 1.0, "k": 1.0, "m": 1.0})
xs = np.random.default_rng(0).uniform(-5, 5, (12, 2))

for label, xi in [("time translation", SymmetryGenerator.translation(kg.spec, 0)),
                  ("space translation", SymmetryGenerator.translation(kg.spec, 1)),
                  ("fiber shift (not a symmetry here)", SymmetryGenerator.fiber_shift(kg.spec))]:
    field = divergence_residual(kg, xi, wave, xs)
    print(f"{label:36s} max |div J| = {field.max_div:.2e}")

# with V = 0 the shift is a symmetry and J^mu = p^mu (wave action and flux)
free = nonlinear_wave(1, 1, "zero")
massless = exact_solution("kg_plane_wave", {"A": 1.0, "k": 1.0, "m": 0.0})
field = divergence_residual(free, SymmetryGenerator.fiber_shift(free.spec), massless, xs)
print(f"{'fiber shift, V = 0':36s} max |div J| = {field.max_div:.2e}")

# mechanics: J = p xi - H f along q = cos t + 2 sin t
osc = particle(1, "harmonic(1)")
t = np.linspace(0, 20, 201)
q, p = np.cos(t) + 2 * np.sin(t), -np.sin(t) + 2 * np.cos(t)
res = particle_noether(osc, t, q, p, f=1.0)
print("oscillator: J =", res.J[0], " drift over t in [0, 20]:", res.drift)
