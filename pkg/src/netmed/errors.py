"""Exception types raised across the package."""


class NetmedError(Exception):
    """Base class for all errors raised by netmed."""


class DimensionError(NetmedError, ValueError):
    """A dimension argument is out of range or shapes do not conform."""


class InputError(NetmedError, ValueError):
    """An input matrix or table fails validation (non-finite, wrong shape, ...)."""


class CollinearityError(NetmedError, ValueError):
    """A design matrix is rank deficient.

    ``columns`` holds the 0-based indices of the columns implicated in the
    near-null direction of the design.
    """

    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class RankError(NetmedError, ValueError):
    """A matrix has lower rank than the requested decomposition."""


class ModelError(NetmedError, ValueError):
    """Model parameters are invalid (e.g. edge probabilities outside [0, 1])."""


class StateError(NetmedError, RuntimeError):
    """An operation was applied to an object in the wrong state."""


class ParseError(NetmedError, ValueError):
    """A text input could not be parsed; ``line`` is the 1-based line number."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
