"""Exception hierarchy for graph-ipm.

Library code raises these; the CLI layer turns them into the standardized
``{"status", "data", "error"}`` envelope.
"""


class GraphIpmError(Exception):
    """Base class for every error raised by graph-ipm."""


class DomainError(GraphIpmError, ArithmeticError):
    """An expression was evaluated outside its domain (log, sqrt, division)."""


class TrialPointFailure(GraphIpmError):
    """An oracle failed at a trial point; the line search rejects the point."""


# Model construction

class ModelError(GraphIpmError):
    """Invalid modeling call."""


class SelfLoop(ModelError):
    pass


class DuplicateEdge(ModelError):
    pass


class UnknownNode(ModelError):
    pass


class ScopeViolation(ModelError):
    """An expression references a variable outside the allowed node scope."""


class EmptyModel(ModelError):
    pass


class InvalidHorizon(ModelError):
    pass


# Partitioning

class TooManyParts(GraphIpmError):
    pass


# Linear algebra

class NotInterior(GraphIpmError):
    """A primal-dual point is not strictly inside its bounds."""


class SingularMatrix(GraphIpmError):
    """A factorization met a zero (or numerically zero) pivot."""


class SubdomainSingular(SingularMatrix):
    """The factorization of one RAS subdomain block failed."""

    def __init__(self, k: int, message: str | None = None):
        self.k = k
        super().__init__(message or f"Subdomain {k} block is singular")


# Interior-point method

class RegularizationExhausted(GraphIpmError):
    pass


class StepTooSmall(GraphIpmError):
    """Backtracking reached the minimum step size without acceptance."""

    def __init__(self, message: str, evaluation_failures_only: bool = False):
        self.evaluation_failures_only = evaluation_failures_only
        super().__init__(message)


class RestorationFailure(GraphIpmError):
    pass


# Persisted formats

class ParseError(GraphIpmError):
    """A fixture or model file does not match its documented schema."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")
