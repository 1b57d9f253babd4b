"""Exception hierarchy.

Validation problems (bad inputs, inconsistent tables) derive from
``ValidationError``; numerical trouble (quadrature, factorization, solver)
derives from ``NumericalError``. The CLI maps the two families to exit codes
1 and 2.
"""


class CreditCorrError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(CreditCorrError, ValueError):
    pass


class ScenarioSizeError(ValidationError):
    pass


class CutoffExceededError(ValidationError):
    pass


class DegenerateMarginalError(ValidationError):
    """A default probability of exactly 0 or 1 where correlation is undefined."""


class InconsistentCorrelationError(ValidationError):
    """Joint probabilities implied by a default correlation go negative."""

    def __init__(self, message: str, value: float):
        super().__init__(message)
        self.value = value


class OutOfRangeError(ValidationError):
    pass


class PortfolioParseError(ValidationError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericalError(CreditCorrError, ArithmeticError):
    pass


class MatrixError(NumericalError):
    pass


class SolverError(NumericalError):
    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
