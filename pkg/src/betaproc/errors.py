"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Hyperparameters violate a model constraint."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class NumericalError(ArithmeticError):
    """A numerical routine failed to reach its tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ParseError(ValueError):
    """A data file could not be parsed; carries the 1-based row and column."""

    def __init__(self, message, row=None, col=None):
        where = "" if row is None else f" (row {row}" + ("" if col is None else f", column {col}") + ")"
        super().__init__(message + where)
        self.row = row
        self.col = col
