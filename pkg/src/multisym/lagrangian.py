"""Lagrangian densities, the covariant Legendre transform and the covariant
Hamiltonian on the primary constraint manifold.

A Lagrangian is evaluated on jet coordinates ``(x, y, v)`` with
``v[A, mu] = d y^A / d x^mu`` (time first).  Momenta ``p[A, mu]`` use the
same layout.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import dual
from .bundle import FieldSpec, JetPoint, connection_coeffs, connection_jacobian
from .errors import ConvergenceError, SingularJacobianError, UnknownModelError
from .potentials import Potential, parse_potential

__all__ = [
    "LagrangianDensity", "QuadraticLagrangian", "CallableLagrangian",
    "PhasePoint", "RegularityReport",
    "nonlinear_wave", "elliptic_pattern", "particle", "make_lagrangian",
    "legendre", "regularity_check", "invert_legendre", "hamiltonian",
    "hamiltonian_partials", "hamiltonian_hessian", "partials_fd_error",
]


class LagrangianDensity:
    """Base class: subclasses provide the value and derivative contract.

    Shapes, with ``m = n + 1``: ``dL_dy`` (N,), ``dL_dv`` (N, m),
    ``d2L_dvdv`` (N, m, N, m), ``d2L_dvdy`` (N, m, N), ``d2L_dydy`` (N, N),
    ``d2L_dvdx`` (N, m, m).
    """

    name = "lagrangian"
    explicit_x = False
    explicit_y = True

    def __init__(self, spec: FieldSpec):
        self.spec = spec

    def value(self, x, y, v) -> float:
        raise NotImplementedError

    def dL_dy(self, x, y, v):
        raise NotImplementedError

    def dL_dv(self, x, y, v):
        raise NotImplementedError

    def d2L_dvdv(self, x, y, v):
        raise NotImplementedError

    def d2L_dvdy(self, x, y, v):
        raise NotImplementedError

    def d2L_dydy(self, x, y, v):
        raise NotImplementedError

    def d2L_dvdx(self, x, y, v, h=1e-5):
        N, m = self.spec.fiber_dim, self.spec.base_dim
        if not self.explicit_x:
            return np.zeros((N, m, m))
        x = np.asarray(x, dtype=float)
        out = np.empty((N, m, m))
        for nu in range(m):
            e = np.zeros(m)
            e[nu] = h * max(1.0, abs(x[nu]))
            out[:, :, nu] = (self.dL_dv(x + e, y, v)
                             - self.dL_dv(x - e, y, v)) / (2 * e[nu])
        return out

    def hessian_vv_matrix(self, x, y, v):
        d = self.spec.fiber_dim * self.spec.base_dim
        return np.asarray(self.d2L_dvdv(x, y, v)).reshape(d, d)

    # closed forms are optional; None means "not available"
    def hamiltonian_closed(self, x, y, p):
        return None

    def hamiltonian_partials_closed(self, x, y, p):
        return None

    def legendre_inverse_closed(self, x, y, p):
        return None


class QuadraticLagrangian(LagrangianDensity):
    """``L = 1/2 sum_{A,mu} sigma_mu (v^A_mu)^2 + s V(y)``.

    ``sigma`` is the kinetic signature (one entry per base direction, time
    first) and ``s`` the sign in front of the potential.  This covers the
    nonlinear wave equation (``sigma = (1, -1, ...)``, ``s = +1``), the
    elliptic pattern equation (``sigma = (1, ..., 1)``, ``s = -1``) and
    particle mechanics (``n = 0``).
    """

    def __init__(self, spec, sigma, potential, potential_sign=1.0, name="quadratic"):
        super().__init__(spec)
        self.sigma = np.asarray(sigma, dtype=float).reshape(spec.base_dim)
        self.potential = parse_potential(potential)
        self.s = float(potential_sign)
        self.name = name
        self.explicit_y = not self.potential.is_zero

    def __repr__(self):
        return (f"{self.name}(n={self.spec.n_space}, N={self.spec.fiber_dim}, "
                f"V={self.potential})")

    def value(self, x, y, v):
        v = np.asarray(v, dtype=float)
        return float(0.5 * np.sum(self.sigma * v * v)
                     + self.s * self.potential.value(np.asarray(y, float)))

    def dL_dy(self, x, y, v):
        return self.s * self.potential.grad(np.asarray(y, dtype=float))

    def dL_dv(self, x, y, v):
        return self.sigma * np.asarray(v, dtype=float)

    def d2L_dvdv(self, x, y, v):
        N, m = self.spec.fiber_dim, self.spec.base_dim
        out = np.zeros((N, m, N, m))
        for A in range(N):
            for mu in range(m):
                out[A, mu, A, mu] = self.sigma[mu]
        return out

    def d2L_dvdy(self, x, y, v):
        N, m = self.spec.fiber_dim, self.spec.base_dim
        return np.zeros((N, m, N))

    def d2L_dydy(self, x, y, v):
        return self.s * self.potential.hess(np.asarray(y, dtype=float))

    @property
    def regular(self):
        return bool(np.all(self.sigma != 0))

    def hamiltonian_closed(self, x, y, p):
        """``H = 1/2 sum sigma_mu p^2 - s V`` (flat connection only)."""
        if not (self.spec.is_flat and self.regular):
            return None
        p = np.asarray(p, dtype=float)
        return float(0.5 * np.sum(p * p / self.sigma)
                     - self.s * self.potential.value(np.asarray(y, float)))

    def legendre_inverse_closed(self, x, y, p):
        if not self.regular:
            return None
        return np.asarray(p, dtype=float) / self.sigma

    def hamiltonian_partials_closed(self, x, y, p):
        if not (self.spec.is_flat and self.regular):
            return None
        p = np.asarray(p, dtype=float)
        return (-self.s * self.potential.grad(np.asarray(y, float)),
                p / self.sigma)


class CallableLagrangian(LagrangianDensity):
    """User Lagrangian ``fn(x, y, v) -> L``.

    Derivatives come from nested dual numbers (``derivatives="dual"``) or
    central differences (``"fd"``).  ``fn`` receives object arrays of
    :class:`multisym.dual.Dual` in dual mode, so it must use the functions
    in :mod:`multisym.dual` (or numpy ufuncs) rather than ``math``.
    """

    def __init__(self, spec, fn, explicit_x=False, explicit_y=True,
                 derivatives="dual", fd_step=1e-4, name="callable"):
        super().__init__(spec)
        if derivatives not in ("dual", "fd"):
            raise ValueError("derivatives must be 'dual' or 'fd'")
        self.fn = fn
        self.explicit_x = explicit_x
        self.explicit_y = explicit_y
        self.derivatives = derivatives
        self.fd_step = fd_step
        self.name = name
        self._cache_key = None
        self._cache_val = None

    def __repr__(self):
        return f"CallableLagrangian({self.name}, n={self.spec.n_space}, N={self.spec.fiber_dim})"

    def _pack(self, x, y, v):
        x = np.asarray(x, float).reshape(self.spec.base_dim)
        y = np.asarray(y, float).reshape(self.spec.fiber_dim)
        v = np.asarray(v, float).reshape(self.spec.fiber_dim, self.spec.base_dim)
        parts = ([x] if self.explicit_x else []) + [y, v.ravel()]
        return x, np.concatenate(parts)

    def _unpack(self, x, w):
        N, m = self.spec.fiber_dim, self.spec.base_dim
        off = 0
        if self.explicit_x:
            x = w[:m]
            off = m
        y = w[off:off + N]
        v = w[off + N:].reshape(N, m)
        return x, y, v

    def _full(self, x, y, v):
        x, w = self._pack(x, y, v)
        key = (x.tobytes(), w.tobytes())
        if key == self._cache_key:
            return self._cache_val
        f = lambda ww: self.fn(*self._unpack(x, ww))  # noqa: E731
        if self.derivatives == "dual":
            val, g, H = dual.hessian(f, w)
        else:
            val, g, H = _fd_hessian(lambda ww: float(f(ww)), w, self.fd_step)
        self._cache_key, self._cache_val = key, (val, g, H)
        return val, g, H

    def _slices(self):
        N, m = self.spec.fiber_dim, self.spec.base_dim
        xo = m if self.explicit_x else 0
        return (slice(0, xo), slice(xo, xo + N), slice(xo + N, xo + N + N * m))

    def value(self, x, y, v):
        x, w = self._pack(x, y, v)
        return float(self.fn(*self._unpack(x, w)))

    def dL_dy(self, x, y, v):
        _, g, _ = self._full(x, y, v)
        return g[self._slices()[1]]

    def dL_dv(self, x, y, v):
        _, g, _ = self._full(x, y, v)
        return g[self._slices()[2]].reshape(self.spec.fiber_dim, self.spec.base_dim)

    def d2L_dvdv(self, x, y, v):
        N, m = self.spec.fiber_dim, self.spec.base_dim
        _, _, H = self._full(x, y, v)
        sv = self._slices()[2]
        return H[sv, sv].reshape(N, m, N, m)

    def d2L_dvdy(self, x, y, v):
        N, m = self.spec.fiber_dim, self.spec.base_dim
        _, _, H = self._full(x, y, v)
        _, sy, sv = self._slices()
        return H[sv, sy].reshape(N, m, N)

    def d2L_dydy(self, x, y, v):
        _, _, H = self._full(x, y, v)
        sy = self._slices()[1]
        return H[sy, sy]

    def d2L_dvdx(self, x, y, v, h=1e-5):
        N, m = self.spec.fiber_dim, self.spec.base_dim
        if not self.explicit_x:
            return np.zeros((N, m, m))
        _, _, H = self._full(x, y, v)
        sx, _, sv = self._slices()
        return H[sv, sx].reshape(N, m, m)


def _fd_hessian(f, w, h):
    d = w.size
    hs = h * np.maximum(1.0, np.abs(w))
    f0 = f(w)
    g = np.empty(d)
    H = np.empty((d, d))
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = hs[i]
        fp, fm = f(w + ei), f(w - ei)
        g[i] = (fp - fm) / (2 * hs[i])
        H[i, i] = (fp - 2 * f0 + fm) / hs[i] ** 2
        for j in range(i + 1, d):
            ej = np.zeros(d)
            ej[j] = hs[j]
            H[i, j] = H[j, i] = (f(w + ei + ej) - f(w + ei - ej) - f(w - ei + ej)
                                 + f(w - ei - ej)) / (4 * hs[i] * hs[j])
    return f0, g, H


# ---------------------------------------------------------------------------
# built-in families

def nonlinear_wave(n_space=1, fiber_dim=1, potential="zero", connection=None):
    """``L = 1/2 ((d_0 phi)^2 - sum_i (d_i phi)^2) + V(phi)``."""
    spec = FieldSpec(n_space, fiber_dim, connection)
    sigma = np.r_[1.0, -np.ones(n_space)]
    return QuadraticLagrangian(spec, sigma, potential, +1.0, name="nonlinear_wave")


def elliptic_pattern(n_space=1, potential="zero"):
    """``L = 1/2 |grad phi|^2 - V(phi)``; Euler-Lagrange is ``lap phi + V'(phi) = 0``."""
    spec = FieldSpec(n_space, 1)
    return QuadraticLagrangian(spec, np.ones(n_space + 1), potential, -1.0,
                               name="elliptic_pattern")


def particle(fiber_dim=1, potential="harmonic(1)"):
    """Mechanics ``L(t, q, qdot) = 1/2 |qdot|^2 + V(q)`` (so ``V = -U``)."""
    spec = FieldSpec(0, fiber_dim)
    return QuadraticLagrangian(spec, [1.0], potential, +1.0, name="particle")


_FAMILIES = {
    "nonlinear_wave": lambda n=1, N=1, potential="zero": nonlinear_wave(n, N, potential),
    "elliptic_pattern": lambda n=1, N=1, potential="zero": elliptic_pattern(n, potential),
    "particle": lambda n=0, N=1, potential="harmonic(1)": particle(N, potential),
}


def make_lagrangian(name, n=None, N=None, potential=None) -> LagrangianDensity:
    """Look up a built-in family by name."""
    if name not in _FAMILIES:
        raise UnknownModelError(f"unknown model {name!r}; choose from {sorted(_FAMILIES)}")
    kw = {}
    if n is not None:
        kw["n"] = int(n)
    if N is not None:
        kw["N"] = int(N)
    if potential is not None:
        kw["potential"] = potential
    if name == "particle" and kw.get("n", 0) != 0:
        raise ValueError("particle model requires n = 0")
    if name == "elliptic_pattern" and kw.get("N", 1) != 1:
        raise ValueError("elliptic_pattern is a scalar model (N = 1)")
    return _FAMILIES[name](**kw)


# ---------------------------------------------------------------------------
# Legendre transform and Hamiltonian

@dataclass(frozen=True)
class PhasePoint:
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    p_affine: Optional[float] = None

    @classmethod
    def make(cls, spec: FieldSpec, x, y, p, p_affine=None) -> "PhasePoint":
        x = np.array(x, dtype=float).reshape(spec.base_dim)
        y = np.array(y, dtype=float).reshape(spec.fiber_dim)
        p = np.array(p, dtype=float).reshape(spec.fiber_dim, spec.base_dim)
        for a in (x, y, p):
            a.setflags(write=False)
        return cls(x, y, p, None if p_affine is None else float(p_affine))


@dataclass
class RegularityReport:
    samples: list
    condition_numbers: np.ndarray
    threshold: float
    worst: float = field(init=False)
    passed: bool = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.condition_numbers, dtype=float)
        self.worst = float(np.max(c))
        self.passed = bool(np.all(np.isfinite(c)) and self.worst <= self.threshold)


def legendre(L: LagrangianDensity, gamma: JetPoint) -> PhasePoint:
    """Covariant Legendre transform: ``p_A^mu = dL/dv^A_mu``,
    ``p = L - p_A^mu v^A_mu``."""
    p = np.asarray(L.dL_dv(gamma.x, gamma.y, gamma.v), dtype=float)
    p_aff = L.value(gamma.x, gamma.y, gamma.v) - float(np.sum(p * gamma.v))
    return PhasePoint.make(L.spec, gamma.x, gamma.y, p, p_aff)


def regularity_check(L: LagrangianDensity, samples, threshold=1e8) -> RegularityReport:
    if len(samples) == 0:
        raise ValueError("regularity_check needs at least one sample")
    conds = []
    for g in samples:
        W = L.hessian_vv_matrix(g.x, g.y, g.v)
        if np.linalg.matrix_rank(W) < W.shape[0]:
            conds.append(np.inf)
        else:
            conds.append(np.linalg.cond(W))
    return RegularityReport(list(samples), np.array(conds), float(threshold))


def invert_legendre(L: LagrangianDensity, z: PhasePoint, v_guess=None,
                    tol=1e-10, max_iter=50) -> JetPoint:
    """Solve ``dL/dv(x, y, v) = p`` for ``v``: closed form when the model
    provides one, Newton's method otherwise."""
    spec = L.spec
    N, m = spec.fiber_dim, spec.base_dim
    closed = L.legendre_inverse_closed(z.x, z.y, z.p)
    if closed is not None:
        return JetPoint.make(spec, z.x, z.y, closed)
    v = np.zeros((N, m)) if v_guess is None else np.array(v_guess, float).reshape(N, m)
    target = np.asarray(z.p, dtype=float).reshape(N, m)
    scale = max(1.0, float(np.max(np.abs(target))))
    for _ in range(max_iter):
        r = (L.dL_dv(z.x, z.y, v) - target).ravel()
        if np.max(np.abs(r)) <= tol * scale:
            return JetPoint.make(spec, z.x, z.y, v)
        W = L.hessian_vv_matrix(z.x, z.y, v)
        if not np.all(np.isfinite(W)) or np.linalg.cond(W) > 1e14:
            raise SingularJacobianError(
                f"d2L/dvdv singular at x={z.x}, y={z.y}, v={v.tolist()}")
        v = v - np.linalg.solve(W, r).reshape(N, m)
    r = (L.dL_dv(z.x, z.y, v) - target).ravel()
    if np.max(np.abs(r)) <= tol * scale:
        return JetPoint.make(spec, z.x, z.y, v)
    raise ConvergenceError(f"Legendre inversion did not converge in {max_iter} "
                           f"iterations (residual {np.max(np.abs(r)):.3e})")


def hamiltonian(L: LagrangianDensity, z: PhasePoint, v_guess=None) -> float:
    """Covariant Hamiltonian ``H = p_A^mu (v^A_mu + A^A_mu) - L`` at the
    Legendre preimage of ``z``."""
    g = invert_legendre(L, z, v_guess)
    A = connection_coeffs(L.spec, z.x, z.y)
    return float(np.sum(z.p * (g.v + A))) - L.value(g.x, g.y, g.v)


def hamiltonian_partials(L: LagrangianDensity, z: PhasePoint, v_guess=None,
                         closed_form=False):
    """``(dH/dy, dH/dp)`` with shapes ``(N,)`` and ``(N, n+1)``.

    Computed by implicit differentiation through the Legendre inverse; the
    correction ``(p - dL/dv) dv/d(.)`` accounts for the finite Newton
    residual.  ``closed_form=True`` uses the built-in formula instead.
    """
    if closed_form:
        out = L.hamiltonian_partials_closed(z.x, z.y, z.p)
        if out is None:
            raise ValueError(f"{L!r} has no closed-form Hamiltonian")
        return np.asarray(out[0], float), np.asarray(out[1], float)
    spec = L.spec
    N, m = spec.fiber_dim, spec.base_dim
    d = N * m
    g = invert_legendre(L, z, v_guess)
    W = L.hessian_vv_matrix(g.x, g.y, g.v)
    Winv = np.linalg.inv(W)
    resid = (np.asarray(z.p) - L.dL_dv(g.x, g.y, g.v)).ravel()
    A = connection_coeffs(spec, z.x, z.y)
    dH_dp = g.v + A + (resid @ Winv).reshape(N, m)
    Lvy = np.asarray(L.d2L_dvdy(g.x, g.y, g.v)).reshape(d, N)
    dv_dy = -Winv @ Lvy
    dA_dy = connection_jacobian(spec, z.x, z.y).reshape(d, N)
    dH_dy = (np.asarray(z.p).ravel() @ dA_dy - L.dL_dy(g.x, g.y, g.v)
             + resid @ dv_dy)
    return np.asarray(dH_dy, float), dH_dp


def hamiltonian_hessian(L: LagrangianDensity, z: PhasePoint, v_guess=None):
    """Hessian of ``H`` in ``Z = (y; p[:, 0]; ...; p[:, n])`` ordering."""
    spec = L.spec
    N, m = spec.fiber_dim, spec.base_dim
    d = N * m
    if not spec.is_flat:
        return _fd_hamiltonian_hessian(L, z)
    g = invert_legendre(L, z, v_guess)
    Winv = np.linalg.inv(L.hessian_vv_matrix(g.x, g.y, g.v))
    Lvy = np.asarray(L.d2L_dvdy(g.x, g.y, g.v)).reshape(d, N)
    dv_dy = -Winv @ Lvy
    Hyy = -np.asarray(L.d2L_dydy(g.x, g.y, g.v)) - Lvy.T @ dv_dy
    # flattened (A, mu) -> Z index N + mu*N + A
    perm = np.array([N + mu * N + A for A in range(N) for mu in range(m)])
    Hz = np.zeros((N * (m + 1),) * 2)
    Hz[:N, :N] = Hyy
    Hz[np.ix_(perm, perm)] = Winv
    Hz[np.ix_(perm, np.arange(N))] = dv_dy
    Hz[np.ix_(np.arange(N), perm)] = dv_dy.T
    return Hz


def _fd_hamiltonian_hessian(L, z, h=1e-6):
    spec = L.spec
    N, m = spec.fiber_dim, spec.base_dim
    Z0 = np.concatenate([z.y, np.asarray(z.p).T.ravel()])
    n = Z0.size
    out = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h * max(1.0, abs(Z0[i]))
        cols = []
        for sgn in (1, -1):
            Z = Z0 + sgn * e
            zz = PhasePoint.make(spec, z.x, Z[:N], Z[N:].reshape(m, N).T)
            gy, gp = hamiltonian_partials(L, zz)
            cols.append(np.concatenate([gy, gp.T.ravel()]))
        out[:, i] = (cols[0] - cols[1]) / (2 * e[i])
    return 0.5 * (out + out.T)


def partials_fd_error(L: LagrangianDensity, gamma: JetPoint, h=1e-5) -> float:
    """Largest relative mismatch between the derivative contract and
    central differences of :meth:`value` / first partials at ``gamma``."""
    x, y, v = (np.asarray(a, float) for a in (gamma.x, gamma.y, gamma.v))
    N, m = L.spec.fiber_dim, L.spec.base_dim
    worst = 0.0

    def rel(a, b):
        a, b = np.asarray(a, float), np.asarray(b, float)
        return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))

    fy = np.empty(N)
    fvy = np.empty((N, m, N))
    fyy = np.empty((N, N))
    for B in range(N):
        e = np.zeros(N)
        e[B] = h * max(1.0, abs(y[B]))
        fy[B] = (L.value(x, y + e, v) - L.value(x, y - e, v)) / (2 * e[B])
        fvy[:, :, B] = (L.dL_dv(x, y + e, v) - L.dL_dv(x, y - e, v)) / (2 * e[B])
        fyy[:, B] = (L.dL_dy(x, y + e, v) - L.dL_dy(x, y - e, v)) / (2 * e[B])
    fv = np.empty((N, m))
    fvv = np.empty((N, m, N, m))
    for B in range(N):
        for nu in range(m):
            e = np.zeros((N, m))
            e[B, nu] = h * max(1.0, abs(v[B, nu]))
            fv[B, nu] = (L.value(x, y, v + e) - L.value(x, y, v - e)) / (2 * e[B, nu])
            fvv[:, :, B, nu] = (L.dL_dv(x, y, v + e)
                                - L.dL_dv(x, y, v - e)) / (2 * e[B, nu])
    worst = max(rel(L.dL_dy(x, y, v), fy), rel(L.dL_dv(x, y, v), fv),
                rel(L.d2L_dvdv(x, y, v), fvv), rel(L.d2L_dvdy(x, y, v), fvy),
                rel(L.d2L_dydy(x, y, v), fyy))
    return worst
