"""Trivial-bundle geometry: base R^{n+1}, fiber R^N, first jets, connections.

Index convention: base coordinates are stored time first,
``x = (x^0, x^1, ..., x^n)``, and every array carrying a base index ``mu``
uses the same order (``v[A, mu]``, ``p[A, mu]``).
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import StencilError

__all__ = [
    "FieldSpec", "JetPoint", "SectionPatch", "jet_of_section",
    "connection_coeffs", "connection_jacobian", "default_step", "random_patch",
]


@dataclass(frozen=True)
class FieldSpec:
    """Dimensions of the bundle plus an optional connection.

    ``connection(x, y)`` returns the ``N x (n+1)`` coefficient matrix
    ``A^A_mu``; ``None`` means the flat (zero) connection.
    """

    n_space: int
    fiber_dim: int = 1
    connection: Optional[Callable] = None
    connection_jacobian: Optional[Callable] = None

    def __post_init__(self):
        if self.n_space < 0 or self.fiber_dim < 1:
            raise ValueError(f"invalid dimensions n_space={self.n_space}, "
                             f"fiber_dim={self.fiber_dim}")

    @property
    def base_dim(self) -> int:
        return self.n_space + 1

    @property
    def is_flat(self) -> bool:
        return self.connection is None

    @property
    def state_dim(self) -> int:
        """Length of Z = (y^A; p_A^0; ...; p_A^n)."""
        return self.fiber_dim * (self.n_space + 2)


@dataclass(frozen=True)
class JetPoint:
    x: np.ndarray
    y: np.ndarray
    v: np.ndarray

    @classmethod
    def make(cls, spec: FieldSpec, x, y, v) -> "JetPoint":
        x = np.array(x, dtype=float).reshape(spec.base_dim)
        y = np.array(y, dtype=float).reshape(spec.fiber_dim)
        v = np.array(v, dtype=float).reshape(spec.fiber_dim, spec.base_dim)
        for a in (x, y, v):
            a.setflags(write=False)
        return cls(x, y, v)


def default_step(x, order=1):
    """Per-coordinate finite-difference step, scaled by ``max(1, |x|)``."""
    base = 1e-5 if order == 1 else 1e-4
    return base * np.maximum(1.0, np.abs(np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class SectionPatch:
    """A local section ``phi: x -> y`` with derivative contracts.

    ``dphi(x)`` returns ``(N, n+1)`` and ``d2phi(x)`` returns
    ``(N, n+1, n+1)``.  Missing derivatives fall back to centered
    differences with steps ``h1``/``h2`` (absolute, or the scaled defaults
    when ``None``).  ``domain`` is an optional ``(lo, hi)`` box; stencils
    leaving it raise :class:`StencilError`.
    """

    spec: FieldSpec
    phi: Callable
    dphi: Optional[Callable] = None
    d2phi: Optional[Callable] = None
    h1: Optional[float] = None
    h2: Optional[float] = None
    domain: Optional[tuple] = None

    @property
    def analytic(self) -> bool:
        return self.dphi is not None and self.d2phi is not None

    def _steps(self, x, order):
        h = self.h1 if order == 1 else self.h2
        if h is None:
            return default_step(x, order)
        return np.full(self.spec.base_dim, float(h))

    def _check(self, x, h):
        if self.domain is None:
            return
        lo, hi = (np.broadcast_to(np.asarray(b, dtype=float), x.shape)
                  for b in self.domain)
        if np.any(x - h < lo) or np.any(x + h > hi):
            raise StencilError(f"stencil of half-width {h} around x={x} "
                               f"leaves the patch domain [{lo}, {hi}]")

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.atleast_1d(np.asarray(self.phi(x), dtype=float)).reshape(
            self.spec.fiber_dim)

    def first(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        N, m = self.spec.fiber_dim, self.spec.base_dim
        if self.dphi is not None:
            return np.asarray(self.dphi(x), dtype=float).reshape(N, m)
        h = self._steps(x, 1)
        self._check(x, h)
        out = np.empty((N, m))
        for mu in range(m):
            e = np.zeros(m)
            e[mu] = h[mu]
            out[:, mu] = (self.value(x + e) - self.value(x - e)) / (2 * h[mu])
        return out

    def second(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        N, m = self.spec.fiber_dim, self.spec.base_dim
        if self.d2phi is not None:
            return np.asarray(self.d2phi(x), dtype=float).reshape(N, m, m)
        h = self._steps(x, 2)
        self._check(x, h)
        out = np.empty((N, m, m))
        if self.dphi is not None:
            # differentiate the analytic first derivative once
            for nu in range(m):
                e = np.zeros(m)
                e[nu] = h[nu]
                d = (self.first(x + e) - self.first(x - e)) / (2 * h[nu])
                out[:, :, nu] = d
            return 0.5 * (out + out.transpose(0, 2, 1))
        f0 = self.value(x)
        for mu in range(m):
            em = np.zeros(m)
            em[mu] = h[mu]
            out[:, mu, mu] = (self.value(x + em) - 2 * f0
                              + self.value(x - em)) / h[mu] ** 2
            for nu in range(mu + 1, m):
                en = np.zeros(m)
                en[nu] = h[nu]
                d = (self.value(x + em + en) - self.value(x + em - en)
                     - self.value(x - em + en) + self.value(x - em - en))
                out[:, mu, nu] = out[:, nu, mu] = d / (4 * h[mu] * h[nu])
        return out


def jet_of_section(spec: FieldSpec, patch: SectionPatch, x) -> JetPoint:
    """First jet ``(x, phi(x), d phi(x))`` of a section at ``x``."""
    x = np.asarray(x, dtype=float)
    return JetPoint.make(spec, x, patch.value(x), patch.first(x))


def connection_coeffs(spec: FieldSpec, x, y) -> np.ndarray:
    """Connection coefficients ``A^A_mu`` as an ``N x (n+1)`` matrix."""
    shape = (spec.fiber_dim, spec.base_dim)
    if spec.connection is None:
        return np.zeros(shape)
    return np.asarray(spec.connection(np.asarray(x, float), np.asarray(y, float)),
                      dtype=float).reshape(shape)


def connection_jacobian(spec: FieldSpec, x, y, h=1e-6) -> np.ndarray:
    """``d A^A_mu / d y^B`` with shape ``(N, n+1, N)``."""
    N, m = spec.fiber_dim, spec.base_dim
    if spec.connection is None:
        return np.zeros((N, m, N))
    if spec.connection_jacobian is not None:
        return np.asarray(spec.connection_jacobian(x, y), float).reshape(N, m, N)
    y = np.asarray(y, dtype=float)
    out = np.empty((N, m, N))
    for B in range(N):
        e = np.zeros(N)
        e[B] = h * max(1.0, abs(y[B]))
        out[:, :, B] = (connection_coeffs(spec, x, y + e)
                        - connection_coeffs(spec, x, y - e)) / (2 * e[B])
    return out


def random_patch(spec: FieldSpec, rng, modes=3, amplitude=1.0, max_wavenumber=1.5):
    """Smooth random section ``phi^A = c^A + sum_m a cos(kappa . x + theta)``
    with analytic jets; draws from the numpy Generator ``rng``."""
    N, m = spec.fiber_dim, spec.base_dim
    c = rng.uniform(-0.5, 0.5, N)
    a = amplitude * rng.uniform(-1.0, 1.0, (N, modes)) / modes
    kappa = rng.uniform(-max_wavenumber, max_wavenumber, (N, modes, m))
    theta = rng.uniform(0.0, 2 * np.pi, (N, modes))

    def arg(x):
        return kappa @ np.asarray(x, float) + theta

    def phi(x):
        return c + np.sum(a * np.cos(arg(x)), axis=1)

    def dphi(x):
        return -np.einsum("am,amn->an", a * np.sin(arg(x)), kappa)

    def d2phi(x):
        return -np.einsum("am,amn,aml->anl", a * np.cos(arg(x)), kappa, kappa)

    return SectionPatch(spec, phi, dphi, d2phi)
