"""Exception types shared across the package."""


class ShapeMismatchError(ValueError):
    """An array does not match the grid or trajectory it is paired with."""


class BoundaryError(ValueError):
    """Field mass touches the periodic boundary, or an object leaves the domain."""


class BlowUpError(RuntimeError):
    """Time stepping produced a non-finite field.

    Attributes:
        last_good_time: last time at which the field was finite.
        partial: optional partial results gathered before the failure.
    """

    def __init__(self, message, last_good_time, partial=None):
        super().__init__(message)
        self.last_good_time = last_good_time
        self.partial = partial
