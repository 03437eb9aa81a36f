"""Exception types shared across the package."""


class SisfitError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(SisfitError):
    """An input failed a documented precondition."""


class ConvergenceError(SisfitError):
    """An iterative routine exhausted its sweep budget."""
