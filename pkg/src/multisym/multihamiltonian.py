"""First-order multisymplectic form of a Lagrangian field theory.

State ordering on the fibers of the primary constraint manifold is fixed
throughout the package as

    Z = (y^1..y^N; p_1^0..p_N^0; p_1^1..p_N^1; ...; p_1^n..p_N^n)

(fiber block first, then one momentum block per base direction, time
first).  For ``n = 1, N = 1`` this is Bridges' ``(phi, p^0, p^1)``.

The system solved by Hamiltonian sections is

    dH/dp_A^mu = v^A_mu + A^A_mu,      d_mu p_A^mu = -dH/dy^A,

which in matrix form reads ``sum_mu omega^(mu) d_mu Z = grad H(Z)``
(flat connection).
"""

from dataclasses import dataclass

import numpy as np

from .bundle import FieldSpec, SectionPatch, connection_coeffs, jet_of_section
from .errors import UnsupportedDimensionError
from .lagrangian import LagrangianDensity, hamiltonian_partials, legendre

__all__ = [
    "StructureMatrices", "DDWResidual", "EquivalenceReport",
    "assemble_structure_matrices", "z_index", "pack_state", "unpack_state",
    "ddw_residual", "euler_lagrange_residual", "equivalence_check",
    "bridges_form_residual", "ddw_as_bridges", "momentum_divergence",
]


def z_index(spec: FieldSpec, block, A):
    """Position in Z of ``y^A`` (``block="y"``) or ``p_A^mu`` (``block=mu``)."""
    N = spec.fiber_dim
    if block == "y":
        return A
    return N + int(block) * N + A


def pack_state(y, p):
    """``(y (N,), p (N, n+1)) -> Z``."""
    return np.concatenate([np.asarray(y, float), np.asarray(p, float).T.ravel()])


def unpack_state(spec: FieldSpec, Z):
    N, m = spec.fiber_dim, spec.base_dim
    Z = np.asarray(Z, dtype=float)
    return Z[:N], Z[N:].reshape(m, N).T


@dataclass(frozen=True)
class StructureMatrices:
    d: int
    matrices: tuple

    def __getitem__(self, mu):
        return self.matrices[mu]

    def __len__(self):
        return len(self.matrices)


def assemble_structure_matrices(spec: FieldSpec) -> StructureMatrices:
    """The ``n + 1`` skew pairings ``omega^(mu)`` on Z.

    ``omega^(mu)`` couples only ``y^A`` with ``p_A^mu``: entry
    ``(y^A, p_A^mu) = -1`` and ``(p_A^mu, y^A) = +1``.
    """
    N, m = spec.fiber_dim, spec.base_dim
    d = spec.state_dim
    mats = []
    for mu in range(m):
        w = np.zeros((d, d), dtype=int)
        for A in range(N):
            i, j = z_index(spec, "y", A), z_index(spec, mu, A)
            w[i, j] = -1
            w[j, i] = 1
        w.setflags(write=False)
        mats.append(w)
    return StructureMatrices(d, tuple(mats))


@dataclass(frozen=True)
class DDWResidual:
    r_y: np.ndarray
    r_p: np.ndarray

    @property
    def norm_y(self):
        return float(np.max(np.abs(self.r_y)))

    @property
    def norm_p(self):
        return float(np.max(np.abs(self.r_p)))

    def as_vector(self):
        return pack_state(self.r_y, self.r_p)


def _momentum_jacobian(L: LagrangianDensity, patch: SectionPatch, x):
    """``d p_A^mu / d x^nu`` along the conjugate section, shape (N, m, m).

    Chain rule through ``p = dL/dv(x, phi(x), d phi(x))``.
    """
    jet = jet_of_section(L.spec, patch, x)
    d2 = patch.second(x)
    Lvx = L.d2L_dvdx(jet.x, jet.y, jet.v)
    Lvy = L.d2L_dvdy(jet.x, jet.y, jet.v)
    Lvv = L.d2L_dvdv(jet.x, jet.y, jet.v)
    return (Lvx + np.einsum("amb,bn->amn", Lvy, jet.v)
            + np.einsum("ambl,bln->amn", Lvv, d2))


def _momentum_jacobian_stencil(L, patch, x, h=None):
    spec = L.spec
    m = spec.base_dim
    x = np.asarray(x, dtype=float)
    hs = patch._steps(x, 2) if h is None else np.full(m, float(h))
    patch._check(x, hs)
    out = np.empty((spec.fiber_dim, m, m))
    for nu in range(m):
        e = np.zeros(m)
        e[nu] = hs[nu]
        pp = legendre(L, jet_of_section(spec, patch, x + e)).p
        pm = legendre(L, jet_of_section(spec, patch, x - e)).p
        out[:, :, nu] = (pp - pm) / (2 * hs[nu])
    return out


def momentum_divergence(L, patch, x, method=None):
    """``d_mu p_A^mu`` along the conjugate section.

    ``method="chain"`` differentiates through the Lagrangian Hessian using
    the patch's second derivatives; ``"stencil"`` differences the momenta
    of neighbouring jets.  Default: chain for analytic patches.
    """
    if method is None:
        method = "chain" if patch.analytic else "stencil"
    if method == "chain":
        J = _momentum_jacobian(L, patch, x)
    elif method == "stencil":
        J = _momentum_jacobian_stencil(L, patch, x)
    else:
        raise ValueError(f"unknown method {method!r}")
    return np.einsum("amm->a", J)


def ddw_residual(L: LagrangianDensity, patch: SectionPatch, x, method=None) -> DDWResidual:
    """de Donder-Weyl residual blocks on the conjugate section at ``x``."""
    jet = jet_of_section(L.spec, patch, x)
    z = legendre(L, jet)
    dH_dy, dH_dp = hamiltonian_partials(L, z, v_guess=jet.v)
    A = connection_coeffs(L.spec, jet.x, jet.y)
    r_y = dH_dy + momentum_divergence(L, patch, x, method)
    r_p = dH_dp - (jet.v + A)
    return DDWResidual(r_y, r_p)


def euler_lagrange_residual(L: LagrangianDensity, patch: SectionPatch, x):
    """``E_A = dL/dy^A - D_mu (dL/dv^A_mu)`` with the total derivative
    expanded by the chain rule over ``(x, y, v)``."""
    jet = jet_of_section(L.spec, patch, x)
    J = _momentum_jacobian(L, patch, x)
    return L.dL_dy(jet.x, jet.y, jet.v) - np.einsum("amm->a", J)


@dataclass
class EquivalenceReport:
    points: np.ndarray
    r_y: np.ndarray
    E: np.ndarray
    r_p_max: np.ndarray
    tol: float

    @property
    def max_sum(self):
        """``max |r_y + E|``: zero when the two routes agree."""
        return float(np.max(np.abs(self.r_y + self.E)))

    @property
    def max_rp(self):
        return float(np.max(self.r_p_max))

    @property
    def passed(self):
        return self.max_sum <= self.tol and self.max_rp <= self.tol


def equivalence_check(L, patch, xs, tol=1e-8, method=None) -> EquivalenceReport:
    """Compare the Hamiltonian residual with the Euler-Lagrange residual:
    ``r_p`` must vanish and ``r_y = -E`` at every sample point."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ry, E, rp = [], [], []
    for x in xs:
        r = ddw_residual(L, patch, x, method)
        ry.append(r.r_y)
        rp.append(r.norm_p)
        E.append(euler_lagrange_residual(L, patch, x))
    return EquivalenceReport(xs, np.array(ry), np.array(E), np.array(rp), tol)


def bridges_form_residual(L: LagrangianDensity, patch: SectionPatch, x):
    """``M d_0 Z + K d_1 Z - grad H(Z)`` along the conjugate section (n = 1).

    Sign of the gradient side: with ``M, K`` as in Bridges' matrices the
    system that reproduces the field equation is ``M Z_t + K Z_x =
    +grad H``.  For a flat connection the result equals
    ``-ddw_residual(...).as_vector()`` component by component; see
    :func:`ddw_as_bridges`.
    """
    spec = L.spec
    if spec.n_space != 1:
        raise UnsupportedDimensionError(
            f"Bridges form is defined for n = 1, got n = {spec.n_space}")
    jet = jet_of_section(spec, patch, x)
    z = legendre(L, jet)
    dH_dy, dH_dp = hamiltonian_partials(L, z, v_guess=jet.v)
    grad = pack_state(dH_dy, dH_dp)
    Jp = _momentum_jacobian(L, patch, x) if patch.analytic else \
        _momentum_jacobian_stencil(L, patch, x)
    # d_nu Z = (v[:, nu]; dp[:, 0, nu]; dp[:, 1, nu])
    dZ = [pack_state(jet.v[:, nu], Jp[:, :, nu]) for nu in range(2)]
    M, K = assemble_structure_matrices(spec).matrices
    return M @ dZ[0] + K @ dZ[1] - grad


def ddw_as_bridges(r: DDWResidual):
    """Map a de Donder-Weyl residual onto the Bridges residual layout.

    The correspondence is the signed identity ``-1`` on Z ordering.
    """
    return -r.as_vector()
