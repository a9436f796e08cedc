"""Diagonal periodic patterns ``phi(x) = f(k_mu x^mu)`` of scalar models,
their constraint levels ``I_mu`` and the Hessian ``dk/dI``.

For ``L = 1/2 sum sigma_mu v_mu^2 + s V(phi)`` the ansatz reduces the field
equation to the oscillator

    c f'' = s V'(f),      c = sum_mu sigma_mu k_mu^2,

on the phase circle ``chi in [0, 2 pi)``.  Orbits are fixed by their turning
point ``f(0) = A, f'(0) = 0``; one component of ``k`` is solved for so the
orbit closes after ``2 pi``.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .bundle import SectionPatch
from .errors import (ConvergenceError, SingularJacobianError,
                     UnknownModelError, UnsupportedDimensionError)
from .lagrangian import QuadraticLagrangian

__all__ = [
    "PhaseReduction", "PeriodicOrbit", "PatternReport", "reduce_diagonal",
    "find_periodic_orbit", "constraint_levels", "hessian_index", "solve_k",
]

_RTOL = 1e-13
_ATOL = 1e-14


@dataclass(frozen=True)
class PhaseReduction:
    """Reduced ODE ``c f'' = s V'(f)`` for wavevector ``k``."""

    L: QuadraticLagrangian
    k: np.ndarray

    @property
    def sigma(self):
        return self.L.sigma

    @property
    def coefficient(self):
        return float(np.sum(self.sigma * self.k ** 2))

    def force(self, f):
        """``s V'(f)`` (the right-hand side before dividing by ``c``)."""
        return self.L.s * self.L.potential.scalar_prime(f)

    def rhs(self, chi, a, c=None):
        """First-order form in ``a = (f, f')``."""
        c = self.coefficient if c is None else c
        return np.array([a[1], self.force(a[0]) / c])

    def second(self, f, c=None):
        c = self.coefficient if c is None else c
        return self.force(f) / c

    def momenta(self, f, fp):
        """``p^mu = sigma_mu k_mu f'`` sampled along the loop, shape (..., n+1)."""
        return np.multiply.outer(fp, self.sigma * self.k)

    def with_k(self, k):
        return PhaseReduction(self.L, np.asarray(k, dtype=float))


def reduce_diagonal(L, k) -> PhaseReduction:
    """Restrict a scalar built-in model to the diagonal ansatz."""
    if not isinstance(L, QuadraticLagrangian):
        raise UnknownModelError(f"pattern reduction needs a built-in family, got {L!r}")
    if L.spec.fiber_dim != 1:
        raise UnsupportedDimensionError("pattern reduction requires a scalar field (N = 1)")
    if not L.spec.is_flat:
        raise UnsupportedDimensionError("pattern reduction requires a flat connection")
    k = np.asarray(k, dtype=float).reshape(L.spec.base_dim)
    return PhaseReduction(L, k)


@dataclass
class PeriodicOrbit:
    reduction: PhaseReduction
    amplitude: float
    chi: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    closure_error: float
    dense: Optional[object] = field(default=None, repr=False)

    @property
    def k(self):
        return self.reduction.k

    @property
    def fpp(self):
        return self.reduction.second(self.f)

    @property
    def momenta(self):
        return self.reduction.momenta(self.f, self.fp)

    def state(self, chi):
        """``(f, f')`` at arbitrary phase (dense output, wrapped mod 2 pi)."""
        if self.dense is None:
            raise ValueError("orbit carries no dense output")
        return self.dense(np.mod(chi, 2 * np.pi))

    def section(self) -> SectionPatch:
        """Reconstructed field ``phi(x) = f(k . x)`` with analytic jets;
        ``f''`` comes from the reduced equation."""
        red = self.reduction
        k = red.k

        def phi(x):
            return np.array([self.state(k @ x)[0]])

        def dphi(x):
            return self.state(k @ x)[1] * k[None, :]

        def d2phi(x):
            f = self.state(k @ x)[0]
            return red.second(f) * np.outer(k, k)[None]

        return SectionPatch(red.L.spec, phi, dphi, d2phi)


def _shoot(red, A, c, chi_end, dense=False):
    return solve_ivp(red.rhs, (0.0, chi_end), [A, 0.0], args=(c,), method="DOP853",
                     rtol=_RTOL, atol=_ATOL, dense_output=dense)


def _half_period(red, A, sign, tau_max=1e3):
    """Time for ``f_tt = sign * s V'(f)`` to travel from the turning point
    ``A`` to the next one, or ``None`` when it never turns back."""
    def turn(t, a):
        return a[1]
    turn.terminal = True
    g = sign * red.force(A)
    if g == 0:
        return None
    turn.direction = -np.sign(g)
    sol = solve_ivp(lambda t, a: [a[1], sign * red.force(a[0])], (0.0, tau_max), [A, 0.0],
                    method="DOP853", rtol=_RTOL, atol=_ATOL, events=turn)
    if sol.t_events[0].size == 0:
        return None
    return float(sol.t_events[0][0])


def _coefficient_for(red, A, prefer=None):
    """``c`` making the half period in ``chi`` equal to ``pi``.

    Rescaling ``chi = sqrt|c| tau`` turns ``c f'' = s V'`` into
    ``f_tt = sign(c) s V'``, so ``c = sign (pi / T_half)^2``.
    """
    signs = (1.0, -1.0)
    if prefer is not None and prefer < 0:
        signs = (-1.0, 1.0)
    for sign in signs:
        T = _half_period(red, A, sign)
        if T is not None:
            return sign * (math.pi / T) ** 2
    raise ConvergenceError(f"no periodic orbit through turning point f = {A!r} "
                           "(hyperbolic or unbounded dynamics)")


def solve_k(red: PhaseReduction, c, solve_for=0, guess_sign=1.0):
    """Wavevector with ``sum sigma k^2 = c`` obtained by changing ``k[solve_for]``."""
    k = red.k.copy()
    sig = red.sigma
    rest = c - float(np.sum(np.delete(sig * k ** 2, solve_for)))
    k2 = rest / sig[solve_for]
    if k2 <= 0:
        raise ConvergenceError(
            f"no real k[{solve_for}] gives coefficient {c:.6g} with the other components fixed")
    k[solve_for] = math.copysign(math.sqrt(k2), guess_sign if guess_sign != 0 else 1.0)
    return k


def find_periodic_orbit(red: PhaseReduction, amplitude, solve_for=0, samples=512,
                        tol=1e-10, max_iter=20) -> PeriodicOrbit:
    """Close the orbit with turning point ``f(0) = amplitude`` after ``2 pi``.

    The coefficient ``c`` comes from the rescaled half period and is
    polished by Newton shooting on ``f'(pi) = 0``; the component
    ``k[solve_for]`` is then adjusted to match ``c``.
    """
    if samples < 256:
        raise ValueError("at least 256 samples per period are required")
    A = float(amplitude)
    c_now = red.coefficient
    if A == 0.0 or red.force(A) == 0.0:
        # equilibrium: trivially closed, k unchanged
        chi = 2 * np.pi * np.arange(samples) / samples
        f = np.full(samples, A)
        z = np.zeros(samples)
        return PeriodicOrbit(red, A, chi, f, z, 0.0,
                             lambda s: np.array([np.full(np.shape(s), A), np.zeros(np.shape(s))]))
    c = _coefficient_for(red, A, prefer=c_now if c_now != 0 else None)
    for _ in range(max_iter):
        r = _shoot(red, A, c, np.pi).y[1, -1]
        if abs(r) <= tol * max(1.0, abs(A)):
            break
        h = 1e-7 * abs(c)
        dr = (_shoot(red, A, c + h, np.pi).y[1, -1] - _shoot(red, A, c - h, np.pi).y[1, -1]) / (2 * h)
        if dr == 0:
            break
        c -= r / dr
    k = solve_k(red, c, solve_for, red.k[solve_for])
    red = red.with_k(k)
    sol = _shoot(red, A, c, 2 * np.pi, dense=True)
    closure = float(max(abs(sol.y[0, -1] - A), abs(sol.y[1, -1])))
    if closure > tol:
        raise ConvergenceError(f"orbit closure error {closure:.3e} exceeds {tol:.1e}")
    chi = 2 * np.pi * np.arange(samples) / samples
    f, fp = sol.sol(chi)
    return PeriodicOrbit(red, A, chi, f, fp, closure, sol.sol)


def constraint_levels(orbit: PeriodicOrbit, kappa="p_dphi"):
    """Loop integrals ``I_mu`` of ``alpha' -| kappa^(mu)``.

    ``kappa="p_dphi"`` integrates ``p^mu f'``; ``"phi_dp"`` integrates
    ``-f (p^mu)'``.  A callable receives the orbit and returns the
    ``(samples, n+1)`` integrand.  Trapezoid rule on the periodic grid.
    """
    red = orbit.reduction
    if callable(kappa):
        integrand = np.asarray(kappa(orbit), dtype=float)
    elif kappa == "p_dphi":
        integrand = orbit.momenta * orbit.fp[:, None]
    elif kappa == "phi_dp":
        dp = np.multiply.outer(orbit.fpp, red.sigma * red.k)
        integrand = -orbit.f[:, None] * dp
    else:
        raise ValueError(f"unknown primitive {kappa!r}")
    return 2 * np.pi * np.mean(integrand, axis=0)


@dataclass
class PatternReport:
    k: np.ndarray
    amplitude: float
    orbit: PeriodicOrbit
    I: np.ndarray
    hessian_raw: np.ndarray
    hessian: np.ndarray
    determinant: float
    eigenvalues: np.ndarray
    index: int
    degenerate: bool
    asymmetry: float

    def summary(self):
        rows = [("k", self.k), ("amplitude", self.amplitude), ("I", self.I),
                ("hessian", self.hessian.ravel()), ("det", self.determinant),
                ("index", self.index), ("degenerate", self.degenerate),
                ("asymmetry", self.asymmetry)]
        return rows


def hessian_index(L, k_center, amplitude, deltas=None, solve_for=0, samples=512) -> PatternReport:
    """``Hess = dk/dI`` by central differences along the orbit family.

    The family is parametrized by ``s = (A, k_nu for nu != solve_for)``;
    with ``Jk = dk/ds`` and ``JI = dI/ds`` the Hessian is ``Jk JI^-1``.
    ``deltas`` gives the step for each entry of ``s`` (default ``1e-4``
    relative).  The index counts negative eigenvalues of the symmetrized
    matrix; ``degenerate`` flags ``|det| < 1e-8 max(1, |Hess|)^(n+1)``.
    """
    red0 = reduce_diagonal(L, k_center)
    m = red0.k.size
    free = [mu for mu in range(m) if mu != solve_for]
    s0 = np.r_[float(amplitude), red0.k[free]]
    if deltas is None:
        deltas = 1e-4 * np.maximum(1.0, np.abs(s0))
    deltas = np.broadcast_to(np.asarray(deltas, dtype=float), s0.shape)

    def evaluate(s):
        k = red0.k.copy()
        k[free] = s[1:]
        orbit = find_periodic_orbit(red0.with_k(k), s[0], solve_for, samples)
        return orbit.k.copy(), constraint_levels(orbit), orbit

    k_c, I_c, orbit_c = evaluate(s0)
    Jk = np.empty((m, m))
    JI = np.empty((m, m))
    for j in range(m):
        e = np.zeros(m)
        e[j] = deltas[j]
        kp, Ip, _ = evaluate(s0 + e)
        km, Im, _ = evaluate(s0 - e)
        Jk[:, j] = (kp - km) / (2 * deltas[j])
        JI[:, j] = (Ip - Im) / (2 * deltas[j])
    if np.linalg.cond(JI) > 1e12:
        raise SingularJacobianError("dI/ds is singular along the orbit family")
    H_raw = Jk @ np.linalg.inv(JI)
    H = 0.5 * (H_raw + H_raw.T)
    norm = float(np.max(np.abs(H_raw)))
    asym = float(np.max(np.abs(H_raw - H_raw.T)) / norm) if norm > 0 else 0.0
    eig = np.linalg.eigvalsh(H)
    det = float(np.prod(eig))
    scale = max(1.0, float(np.max(np.abs(H)))) ** m
    degenerate = abs(det) < 1e-8 * scale
    return PatternReport(k_c, float(amplitude), orbit_c, I_c, H_raw, H, det, eig,
                         int(np.sum(eig < 0)), bool(degenerate), asym)
