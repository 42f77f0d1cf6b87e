class ZeckError(ValueError):
    """Base class for precondition violations raised by this package."""


class RecurrenceError(ZeckError):
    pass


class TableTooShortError(ZeckError, IndexError):
    def __init__(self, needed, have):
        self.needed = needed
        self.have = have
        super().__init__(f"sequence table has {have} terms, {needed} needed")


class IntervalTooLargeError(ZeckError):
    pass


class RootValidationError(ZeckError):
    """A root of T_f violated one of the standing assumptions."""
