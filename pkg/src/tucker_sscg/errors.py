"""Exception types raised by the library."""


class ShapeError(ValueError):
    """Operand dimensions do not conform."""


class CapacityError(MemoryError):
    """A dense materialization would exceed the configured size cap."""


class DefinitenessError(ArithmeticError):
    """An operator expected to be symmetric positive definite is not."""


class ParameterError(ValueError):
    """An invalid parameter value was supplied."""
