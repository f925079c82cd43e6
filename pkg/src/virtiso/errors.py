"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operands have incompatible dimensions."""


class NotUnitError(ValueError):
    """A vector expected to lie on the unit sphere does not."""


class NotUnitaryError(ValueError):
    """A matrix expected to be unitary is not, within tolerance."""


class SingularityError(ArithmeticError):
    """A quantity is evaluated at, or too close to, a singular point."""


class UnsupportedParameterError(ValueError):
    """Parameters outside the supported domain of a sampler."""


class ConvergenceError(ArithmeticError):
    """An iterative procedure failed to reach its tolerance."""


class BracketError(ArithmeticError):
    """The secular root finder found an interval without a sign change.

    Attributes
    ----------
    interval : int
        Index of the offending interval (0 is ``(0, theta_1)``).
    dump : dict
        Enough state to reproduce the failure.
    """

    def __init__(self, message, interval=-1, dump=None):
        super().__init__(message)
        self.interval = interval
        self.dump = dump or {}


class InvariantError(AssertionError):
    """A named cross-module invariant failed."""

    def __init__(self, name, detail=""):
        super().__init__(f"{name}: {detail}" if detail else name)
        self.name = name
