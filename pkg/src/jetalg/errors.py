"""Exception types raised by the engine."""

from __future__ import annotations


class JetAlgError(Exception):
    """Base class for all engine errors."""

    code = "error"

    def to_dict(self):
        return {"type": type(self).__name__, "message": str(self)}


class UnknownSymbol(JetAlgError):
    pass


class UnsupportedExtension(JetAlgError):
    """Nested or multiple independent surds in one expression."""


class DegenerateSampling(JetAlgError):
    """No valid sample point could be drawn within the retry budget."""


class JetOrderOverflow(JetAlgError):
    pass


class InconsistentRelations(JetAlgError):
    pass


class NotATotalDerivative(JetAlgError):
    pass


class IntegrandOutsideClass(JetAlgError):
    pass


class NotClosedForm(JetAlgError):
    """Point pushforward left a dependence on the old variable.

    ``rhs`` holds the transformed right-hand side in mixed variables.
    """

    def __init__(self, message, rhs=None):
        super().__init__(message)
        self.rhs = rhs


class NotAffine(JetAlgError):
    pass


class UnknownFixture(JetAlgError):
    pass


class MissingParameter(JetAlgError):
    pass


class ManifestError(JetAlgError):
    pass


class ExprSyntaxError(JetAlgError):
    """Parse failure carrying a 1-based line and column."""

    def __init__(self, message, line, column):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column

    def to_dict(self):
        d = super().to_dict()
        d.update(line=self.line, column=self.column)
        return d


class TimeBudgetExceeded(JetAlgError):
    pass
