"""Exception hierarchy shared by all fracwave modules."""


class FracwaveError(Exception):
    """Base class for every error raised by fracwave."""


class DomainError(FracwaveError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class AccuracyError(FracwaveError, ArithmeticError):
    """A numerical method could not reach its requested accuracy."""


class PreconditionError(FracwaveError, ValueError):
    """Input data violates a documented precondition (e.g. nonzero trace)."""


class GridError(FracwaveError, ValueError):
    """A discretization grid is too coarse or inconsistent with the data."""


class ConfigError(FracwaveError, ValueError):
    """A run configuration failed to parse or validate.

    ``errors`` holds one human-readable message per problem found.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
