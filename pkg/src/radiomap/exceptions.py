"""Exception types raised by :mod:`radiomap`."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class IllConditionedError(ArithmeticError):
    """A linear system is too ill-conditioned to solve reliably."""

    def __init__(self, message, slice_index=None, condition=None):
        super().__init__(message)
        self.slice_index = slice_index
        self.condition = condition


class DegenerateSliceError(InvalidArgumentError):
    """A slice has too few samples for the requested operation."""
