"""Exception hierarchy.

Numerical failures derive from :class:`NumericalError`; the CLI maps those to
exit status 3 and configuration problems to exit status 2.
"""


class OptoddeError(Exception):
    pass


class ConfigError(OptoddeError, ValueError):
    pass


class PreconditionError(OptoddeError, ValueError):
    pass


class NumericalError(OptoddeError):
    pass


class DimensionError(NumericalError, ValueError):
    """Sample array does not match the grid it is integrated on."""


class DomainError(NumericalError, ValueError):
    """Grid too small, element outside the detection domain, or domain mismatch."""


class TruncationError(DomainError):
    pass


class UnsupportedModeError(NumericalError, ValueError):
    pass


class LimitInvalidError(NumericalError, ValueError):
    """An asymptotic field model was requested outside its regime."""


class DegenerateWeightingError(NumericalError):
    """Sensitivity vanishes, so imprecision and efficiency are undefined."""


class ConvergenceError(NumericalError):
    def __init__(self, message, previous, current):
        super().__init__(f"{message} (previous={previous!r}, current={current!r})")
        self.previous = previous
        self.current = current
