"""Exception types raised across the package."""


class NumericalBlowup(FloatingPointError):
    """A simulator compartment became non-finite."""


class InsufficientHistory(ValueError):
    pass


class InvalidAction(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


class NonFiniteGradient(FloatingPointError):
    pass


class InsufficientSamples(ValueError):
    pass


class NonContiguousWindow(ValueError):
    pass


class EmptyTrace(ValueError):
    pass


class TraceTooShort(ValueError):
    pass


class UnpairedInput(ValueError):
    pass


class CheckpointError(ValueError):
    """Malformed or incompatible checkpoint file."""
