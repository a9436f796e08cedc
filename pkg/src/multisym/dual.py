"""Forward-mode dual numbers.

Duals nest: a ``Dual`` whose parts are themselves ``Dual`` carries mixed
second derivatives, which is how user-supplied Lagrangians get their
Hessians without a symbolic layer.  Elementary functions are exposed both
as module functions (``dual.sin``) and as methods, so ``numpy`` ufuncs on
object arrays (``np.sin(arr)``) dispatch to them as well.
"""

import math

import numpy as np

__all__ = [
    "Dual", "sin", "cos", "tan", "exp", "log", "sqrt", "tanh", "arctan",
    "cosh", "sinh", "derivative", "gradient", "hessian",
]


def _value(x):
    while isinstance(x, Dual):
        x = x.a
    return x


class Dual:
    """Number ``a + b ε`` with ``ε² = 0``; ``a`` and ``b`` may be Duals."""

    __slots__ = ("a", "b")
    __array_priority__ = 1000

    def __init__(self, a, b=0.0):
        self.a = a
        self.b = b

    def __repr__(self):
        return f"Dual({self.a!r}, {self.b!r})"

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.a + other.a, self.b + other.b)
        return Dual(self.a + other, self.b)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.a - other.a, self.b - other.b)
        return Dual(self.a - other, self.b)

    def __rsub__(self, other):
        return Dual(other - self.a, -self.b)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.a * other.a, self.a * other.b + self.b * other.a)
        return Dual(self.a * other, self.b * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            return Dual(self.a / other.a,
                        (self.b * other.a - self.a * other.b) / (other.a * other.a))
        return Dual(self.a / other, self.b / other)

    def __rtruediv__(self, other):
        return Dual(other / self.a, -other * self.b / (self.a * self.a))

    def __neg__(self):
        return Dual(-self.a, -self.b)

    def __pos__(self):
        return self

    def __pow__(self, k):
        if isinstance(k, Dual):
            return exp(k * log(self))
        if k == 0:
            return Dual(self.a ** 0, self.b * 0)
        return Dual(self.a ** k, k * self.a ** (k - 1) * self.b)

    def __rpow__(self, base):
        return exp(self * math.log(base))

    def __abs__(self):
        return -self if _value(self) < 0 else self

    # comparisons use the innermost real part
    def __lt__(self, other):
        return _value(self) < _value(other)

    def __le__(self, other):
        return _value(self) <= _value(other)

    def __gt__(self, other):
        return _value(self) > _value(other)

    def __ge__(self, other):
        return _value(self) >= _value(other)

    def __float__(self):
        return float(_value(self))

    # methods used by numpy object-array ufuncs
    def sin(self):
        return Dual(sin(self.a), cos(self.a) * self.b)

    def cos(self):
        return Dual(cos(self.a), -sin(self.a) * self.b)

    def tan(self):
        return sin(self) / cos(self)

    def exp(self):
        e = exp(self.a)
        return Dual(e, e * self.b)

    def log(self):
        return Dual(log(self.a), self.b / self.a)

    def sqrt(self):
        r = sqrt(self.a)
        return Dual(r, self.b / (2 * r))

    def sinh(self):
        return Dual(sinh(self.a), cosh(self.a) * self.b)

    def cosh(self):
        return Dual(cosh(self.a), sinh(self.a) * self.b)

    def tanh(self):
        t = tanh(self.a)
        return Dual(t, (1 - t * t) * self.b)

    def arctan(self):
        return Dual(arctan(self.a), self.b / (1 + self.a * self.a))


def _lift(name, fn):
    def f(x):
        if isinstance(x, Dual):
            return getattr(x, name)()
        if isinstance(x, np.ndarray):
            return getattr(np, name)(x)
        return fn(x)
    f.__name__ = name
    return f


sin = _lift("sin", math.sin)
cos = _lift("cos", math.cos)
tan = _lift("tan", math.tan)
exp = _lift("exp", math.exp)
log = _lift("log", math.log)
sqrt = _lift("sqrt", math.sqrt)
sinh = _lift("sinh", math.sinh)
cosh = _lift("cosh", math.cosh)
tanh = _lift("tanh", math.tanh)
arctan = _lift("arctan", math.atan)


def _outer_b(x):
    return x.b if isinstance(x, Dual) else 0.0


def derivative(f, x0):
    """d f / dx at ``x0`` for a scalar function."""
    return float(_outer_b(f(Dual(float(x0), 1.0))))


def gradient(f, z):
    """Gradient of ``f: R^d -> R`` at ``z``; one forward pass per component."""
    z = np.asarray(z, dtype=float)
    g = np.empty(z.size)
    for i in range(z.size):
        zz = np.array([Dual(float(v), 1.0 if j == i else 0.0)
                       for j, v in enumerate(z)], dtype=object)
        g[i] = float(_outer_b(f(zz)))
    return g


def hessian(f, z):
    """Value, gradient and Hessian of ``f: R^d -> R`` via nested duals."""
    z = np.asarray(z, dtype=float)
    d = z.size
    H = np.empty((d, d))
    g = np.empty(d)
    val = None
    for i in range(d):
        for j in range(i, d):
            zz = np.empty(d, dtype=object)
            for m in range(d):
                zz[m] = Dual(Dual(float(z[m]), 1.0 if m == j else 0.0),
                             Dual(1.0 if m == i else 0.0, 0.0))
            out = f(zz)
            if not isinstance(out, Dual):
                out = Dual(Dual(out, 0.0), Dual(0.0, 0.0))
            outer_a = out.a if isinstance(out.a, Dual) else Dual(out.a, 0.0)
            outer_b = out.b if isinstance(out.b, Dual) else Dual(out.b, 0.0)
            H[i, j] = H[j, i] = float(outer_b.b)
            if i == j:
                g[i] = float(outer_b.a)
                val = float(outer_a.a)
    return val, g, H
