"""Symmetry generators, their lifts to the constraint manifold, covariant
momentum maps and Hamiltonian Noether currents.

Generators are restricted to constant base translations ``xi^mu`` plus a
fiber vector field ``xi^A(y)``; the lift to momenta then reduces to
``xi_{p_A^mu} = -p_B^mu d xi^B / d y^A``.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .bundle import FieldSpec, SectionPatch, connection_coeffs, jet_of_section
from .lagrangian import (CallableLagrangian, LagrangianDensity, PhasePoint,
                         hamiltonian, hamiltonian_partials, legendre)
from .multihamiltonian import assemble_structure_matrices, pack_state

__all__ = [
    "SymmetryGenerator", "LiftedGenerator", "NoetherCurrentField",
    "EquivarianceReport", "ParticleNoether",
    "lift_generator", "momentum_map", "noether_current",
    "divergence_residual", "equivariance_check", "particle_noether",
    "bridges_momentum_defect", "parse_generator",
]


@dataclass(frozen=True)
class SymmetryGenerator:
    """``xi = (xi^mu, xi^A(y))`` with constant ``xi^mu``.

    ``fiber(y)`` returns ``(N,)``; ``fiber_jacobian(y)`` returns
    ``J[A, B] = d xi^A / d y^B`` and defaults to central differences.
    """

    spec: FieldSpec
    base: np.ndarray
    fiber: Optional[Callable] = None
    fiber_jacobian: Optional[Callable] = None
    label: str = "generator"

    @property
    def f(self) -> float:
        """Time component ``xi^0`` (the mechanics ``f``)."""
        return float(self.base[0])

    def fiber_value(self, y):
        if self.fiber is None:
            return np.zeros(self.spec.fiber_dim)
        return np.asarray(self.fiber(np.asarray(y, float)), float).reshape(
            self.spec.fiber_dim)

    def jacobian(self, y, h=1e-6):
        N = self.spec.fiber_dim
        if self.fiber is None:
            return np.zeros((N, N))
        if self.fiber_jacobian is not None:
            return np.asarray(self.fiber_jacobian(np.asarray(y, float)), float).reshape(N, N)
        y = np.asarray(y, dtype=float)
        out = np.empty((N, N))
        for B in range(N):
            e = np.zeros(N)
            e[B] = h * max(1.0, abs(y[B]))
            out[:, B] = (self.fiber_value(y + e) - self.fiber_value(y - e)) / (2 * e[B])
        return out

    # common generators
    @classmethod
    def zero(cls, spec):
        return cls(spec, np.zeros(spec.base_dim), label="zero")

    @classmethod
    def translation(cls, spec, mu):
        b = np.zeros(spec.base_dim)
        b[mu] = 1.0
        return cls(spec, b, label="time_translation" if mu == 0 else f"space_translation_{mu}")

    @classmethod
    def fiber_shift(cls, spec, direction=None):
        N = spec.fiber_dim
        c = np.ones(N) if direction is None else np.asarray(direction, float).reshape(N)
        return cls(spec, np.zeros(spec.base_dim), lambda y: c,
                   lambda y: np.zeros((N, N)), label="fiber_shift")

    @classmethod
    def fiber_rotation(cls, spec, a=0, b=1):
        """Infinitesimal rotation in the ``(y^a, y^b)`` plane:
        ``xi^a = -y^b``, ``xi^b = y^a``."""
        N = spec.fiber_dim
        G = np.zeros((N, N))
        G[a, b] = -1.0
        G[b, a] = 1.0
        return cls(spec, np.zeros(spec.base_dim), lambda y: G @ y,
                   lambda y: G, label="fiber_rotation")

    @classmethod
    def mechanics(cls, spec, f, xi=None):
        """Generator ``(f, xi)`` for ``n = 0`` with constant fiber part."""
        N = spec.fiber_dim
        c = np.zeros(N) if xi is None else np.asarray(xi, float).reshape(N)
        return cls(spec, np.array([float(f)]), lambda y: c,
                   lambda y: np.zeros((N, N)), label="mechanics")


def parse_generator(spec: FieldSpec, name: str) -> SymmetryGenerator:
    """``time``, ``space[i]``, ``shift``, ``rotation``, ``zero``."""
    name = name.strip()
    if name in ("time", "time_translation"):
        return SymmetryGenerator.translation(spec, 0)
    if name.startswith("space"):
        idx = name[5:].strip("_[]") or "1"
        return SymmetryGenerator.translation(spec, int(idx))
    if name in ("shift", "fiber_shift"):
        return SymmetryGenerator.fiber_shift(spec)
    if name in ("rotation", "fiber_rotation"):
        return SymmetryGenerator.fiber_rotation(spec)
    if name == "zero":
        return SymmetryGenerator.zero(spec)
    raise ValueError(f"unknown generator {name!r}")


@dataclass(frozen=True)
class LiftedGenerator:
    base: np.ndarray
    fiber: np.ndarray
    p: np.ndarray
    p_affine: float = 0.0

    def as_state_vector(self):
        """Fiber part in Z ordering (base translations dropped)."""
        return pack_state(self.fiber, self.p)


def lift_generator(spec: FieldSpec, xi: SymmetryGenerator, z: PhasePoint) -> LiftedGenerator:
    """Prolongation of ``xi`` to the multimomenta.

    With constant ``xi^mu`` the terms carrying ``xi^mu_{,nu}`` vanish and
    ``xi_{p_A^mu} = -p_B^mu d xi^B / d y^A``.
    """
    J = xi.jacobian(z.y)
    p = np.asarray(z.p, dtype=float)
    xp = -np.einsum("bm,ba->am", p, J)
    return LiftedGenerator(np.array(xi.base, float), xi.fiber_value(z.y), xp, 0.0)


def momentum_map(L: LagrangianDensity, xi: SymmetryGenerator, z: PhasePoint, v_guess=None):
    """``J^mu = p_A^mu xi^A + (p_A^nu A^A_nu - H) xi^mu``."""
    H = hamiltonian(L, z, v_guess)
    A = connection_coeffs(L.spec, z.x, z.y)
    p = np.asarray(z.p, dtype=float)
    return xi.fiber_value(z.y) @ p + (float(np.sum(p * A)) - H) * xi.base


def noether_current(L: LagrangianDensity, xi: SymmetryGenerator, patch: SectionPatch, x):
    """Hamiltonian Noether current on the conjugate section at ``x``:

    ``J^mu = p_A^mu xi^A + (p_A^nu A^A_nu - H) xi^mu
             - p_A^mu phi^A_{,nu} xi^nu + p_A^nu phi^A_{,nu} xi^mu``.

    The terms are grouped so that at ``n = 0`` the result is evaluated in
    the same floating-point order as ``p_A xi^A - H f``.
    """
    jet = jet_of_section(L.spec, patch, x)
    z = legendre(L, jet)
    H = hamiltonian(L, z, v_guess=jet.v)
    A = connection_coeffs(L.spec, jet.x, jet.y)
    p = np.asarray(z.p, dtype=float)
    base = np.asarray(xi.base, dtype=float)
    t1 = xi.fiber_value(jet.y) @ p
    t2 = (float(np.sum(p * A)) - H) * base
    P = p.T @ jet.v                      # P[mu, nu] = p_A^mu phi^A_{,nu}
    t3 = P @ base
    t4 = np.trace(P) * base
    return t1 + t2 + (t4 - t3)


@dataclass
class NoetherCurrentField:
    points: np.ndarray
    J: np.ndarray
    div: np.ndarray
    generator: str
    lagrangian: str

    @property
    def max_div(self):
        return float(np.max(np.abs(self.div)))


def divergence_residual(L, xi, patch, xs, h=1e-3, order=4) -> NoetherCurrentField:
    """Centered-difference divergence ``d_mu J^mu`` of the Noether current.

    ``order`` 2 or 4 selects the stencil; ``h`` is scaled per coordinate by
    ``max(1, |x^mu|)``.
    """
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    m = L.spec.base_dim
    Js, divs = [], []
    for x in xs:
        hs = h * np.maximum(1.0, np.abs(x))
        patch._check(x, (2 if order == 4 else 1) * hs)
        Js.append(noether_current(L, xi, patch, x))
        div = 0.0
        for mu in range(m):
            e = np.zeros(m)
            e[mu] = hs[mu]
            if order == 2:
                d = (noether_current(L, xi, patch, x + e)[mu]
                     - noether_current(L, xi, patch, x - e)[mu]) / (2 * hs[mu])
            else:
                d = (-noether_current(L, xi, patch, x + 2 * e)[mu]
                     + 8 * noether_current(L, xi, patch, x + e)[mu]
                     - 8 * noether_current(L, xi, patch, x - e)[mu]
                     + noether_current(L, xi, patch, x - 2 * e)[mu]) / (12 * hs[mu])
            div += d
        divs.append(div)
    return NoetherCurrentField(xs, np.array(Js), np.array(divs), xi.label,
                               getattr(L, "name", type(L).__name__))


@dataclass
class EquivarianceReport:
    values: np.ndarray
    tol: float

    @property
    def max(self):
        return float(np.max(np.abs(self.values)))

    @property
    def passed(self):
        return self.max <= self.tol


def equivariance_check(L, xi, samples, tol=None, h=1e-5) -> EquivarianceReport:
    """``dH . xi_P`` at each phase point (including any explicit base
    dependence of ``H`` along the translation part)."""
    if tol is None:
        fd = isinstance(L, CallableLagrangian) and L.derivatives == "fd"
        tol = 1e-5 if fd else 1e-8
    vals = []
    for z in samples:
        lift = lift_generator(L.spec, xi, z)
        dH_dy, dH_dp = hamiltonian_partials(L, z)
        val = float(dH_dy @ lift.fiber + np.sum(dH_dp * lift.p))
        if L.explicit_x and np.any(lift.base != 0):
            e = h * lift.base
            zp = PhasePoint.make(L.spec, z.x + e, z.y, z.p)
            zm = PhasePoint.make(L.spec, z.x - e, z.y, z.p)
            val += (hamiltonian(L, zp) - hamiltonian(L, zm)) / (2 * h)
        vals.append(val)
    return EquivarianceReport(np.array(vals), float(tol))


@dataclass
class ParticleNoether:
    t: np.ndarray
    J: np.ndarray

    @property
    def drift(self):
        return float(np.max(np.abs(self.J - self.J[0])))


def particle_noether(L, t, q, p, f, xi=None) -> ParticleNoether:
    """Mechanics current ``J = p_A xi^A - H f`` along sampled ``(t, q, p)``."""
    spec = L.spec
    if spec.n_space != 0:
        raise ValueError("particle_noether requires n = 0")
    N = spec.fiber_dim
    t = np.atleast_1d(np.asarray(t, float))
    q = np.asarray(q, float).reshape(t.size, N)
    p = np.asarray(p, float).reshape(t.size, N)
    xi = np.zeros(N) if xi is None else np.asarray(xi, float).reshape(N)
    J = np.empty(t.size)
    for i in range(t.size):
        z = PhasePoint.make(spec, [t[i]], q[i], p[i][:, None])
        H = hamiltonian(L, z)
        J[i] = xi @ p[i] - H * f
    return ParticleNoether(t, J)


def bridges_momentum_defect(spec: FieldSpec, xi: SymmetryGenerator, z: PhasePoint):
    """``max_mu |omega^(mu) xi_P - dN^mu|`` for a fiber generator, where
    ``N^mu = p_A^mu xi^A`` and both sides are covectors on Z."""
    lift = lift_generator(spec, xi, z)
    u = lift.as_state_vector()
    J = xi.jacobian(z.y)
    p = np.asarray(z.p, dtype=float)
    omegas = assemble_structure_matrices(spec)
    worst = 0.0
    for mu in range(spec.base_dim):
        dN_p = np.zeros_like(p)
        dN_p[:, mu] = xi.fiber_value(z.y)
        dN = pack_state(p[:, mu] @ J, dN_p)
        worst = max(worst, float(np.max(np.abs(omegas[mu] @ u - dN))))
    return worst
