"""Named fiber potentials ``V(y)`` used by the built-in Lagrangian families.

Scalar potentials act on vector fibers as a sum over components; ``radial``
depends on ``|y|`` only.  All methods accept ``y`` of shape ``(..., N)`` so
the integrator can evaluate whole grids at once.
"""

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import UnknownModelError

__all__ = ["Potential", "parse_potential", "POTENTIALS"]


@dataclass(frozen=True)
class Potential:
    name: str
    params: tuple
    _v: Callable
    _dv: Callable
    _d2v: Callable
    radial: bool = False

    def __str__(self):
        if not self.params:
            return self.name
        return f"{self.name}({', '.join(repr(p) for p in self.params)})"

    def value(self, y):
        y = np.asarray(y, dtype=float)
        if self.radial:
            return self._v(np.sum(y * y, axis=-1))
        return np.sum(self._v(y), axis=-1)

    def grad(self, y):
        y = np.asarray(y, dtype=float)
        if self.radial:
            # V = g(s), s = |y|^2
            return 2.0 * self._dv(np.sum(y * y, axis=-1))[..., None] * y
        return self._dv(y)

    def hess(self, y):
        y = np.asarray(y, dtype=float)
        N = y.shape[-1]
        if self.radial:
            s = np.sum(y * y, axis=-1)
            g1 = self._dv(s)[..., None, None]
            g2 = self._d2v(s)[..., None, None]
            return 2.0 * g1 * np.eye(N) + 4.0 * g2 * y[..., :, None] * y[..., None, :]
        d2 = self._d2v(y)
        return d2[..., :, None] * np.eye(N)

    def scalar_prime(self, f):
        """``V'(f)`` for a scalar fiber (vectorized over ``f``)."""
        f = np.asarray(f, dtype=float)
        return self.grad(f[..., None])[..., 0]

    def scalar_second(self, f):
        f = np.asarray(f, dtype=float)
        return self.hess(f[..., None])[..., 0, 0]

    @property
    def is_zero(self):
        return self.name == "zero"


def _zero():
    z = lambda y: np.zeros_like(y)  # noqa: E731
    return Potential("zero", (), z, z, z)


def _klein_gordon(m=1.0):
    # V = -m^2 phi^2 / 2 so that phi_tt - phi_xx + m^2 phi = 0
    m2 = float(m) ** 2
    return Potential("klein_gordon", (float(m),),
                     lambda y: -0.5 * m2 * y * y,
                     lambda y: -m2 * y,
                     lambda y: -m2 * np.ones_like(y))


def _harmonic(w=1.0):
    # particle convention L = qdot^2/2 + V(q): V = -w^2 q^2 / 2
    p = _klein_gordon(w)
    return Potential("harmonic", p.params, p._v, p._dv, p._d2v)


def _sine_gordon():
    # V = cos(phi) - 1: phi_tt - phi_xx + sin(phi) = 0, V(0) = 0
    return Potential("sine_gordon", (),
                     lambda y: np.cos(y) - 1.0,
                     lambda y: -np.sin(y),
                     lambda y: -np.cos(y))


def _duffing(lam=-1.0, gam=1.0):
    # V'(phi) = lam*phi + gam*phi^3
    lam, gam = float(lam), float(gam)
    return Potential("duffing", (lam, gam),
                     lambda y: 0.5 * lam * y ** 2 + 0.25 * gam * y ** 4,
                     lambda y: lam * y + gam * y ** 3,
                     lambda y: lam + 3.0 * gam * y ** 2)


def _radial(a=-1.0, b=0.0):
    # V = a|y|^2/2 + b|y|^4/4, written through s = |y|^2
    a, b = float(a), float(b)
    return Potential("radial", (a, b),
                     lambda s: 0.5 * a * s + 0.25 * b * s * s,
                     lambda s: 0.5 * a + 0.5 * b * s,
                     lambda s: 0.5 * b * np.ones_like(s),
                     radial=True)


POTENTIALS = {
    "zero": _zero,
    "klein_gordon": _klein_gordon,
    "harmonic": _harmonic,
    "sine_gordon": _sine_gordon,
    "duffing": _duffing,
    "radial": _radial,
}

_CALL = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")


def parse_potential(spec) -> Potential:
    """Build a potential from ``"name"``, ``"name(a, b)"``, a dict
    ``{"name": ..., "params": [...]}`` or an existing :class:`Potential`."""
    if isinstance(spec, Potential):
        return spec
    if spec is None:
        return _zero()
    if isinstance(spec, dict):
        name, params = spec["name"], list(spec.get("params", []))
    else:
        m = _CALL.match(str(spec))
        if not m:
            raise UnknownModelError(f"cannot parse potential {spec!r}")
        name = m.group(1)
        args = m.group(2)
        params = [float(a) for a in args.split(",")] if args and args.strip() else []
    if name not in POTENTIALS:
        raise UnknownModelError(f"unknown potential {name!r}; "
                                f"choose from {sorted(POTENTIALS)}")
    return POTENTIALS[name](*params)
