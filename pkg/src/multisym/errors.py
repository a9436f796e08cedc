"""Exception types raised by multisym."""


class MultisymError(Exception):
    """Base class for all library errors."""


class StencilError(MultisymError):
    """A finite-difference stencil would leave the patch domain."""


class ConvergenceError(MultisymError):
    """An iterative solve did not reach its tolerance."""


class SingularJacobianError(MultisymError):
    """A Newton or continuation step hit a singular matrix."""


class UnsupportedDimensionError(MultisymError):
    """The operation is only defined for a specific base dimension."""


class UnknownModelError(MultisymError, KeyError):
    """Unknown model, potential, or exact-solution name."""

    def __str__(self):
        return Exception.__str__(self)
