"""Exception hierarchy shared across the package."""


class MongeLabError(Exception):
    """Base class for all errors raised by mongelab."""


class DomainError(MongeLabError, ValueError):
    pass


class PointOutsideDomain(DomainError):
    pass


class PointInExcisionTube(DomainError):
    pass


class NonFiniteEvaluation(MongeLabError, ArithmeticError):
    pass


class PreconditionError(MongeLabError, ValueError):
    """An operation was called with inputs violating its documented preconditions."""


class ProfileBreakdownError(MongeLabError):
    """The profile ODE lost positivity or blew up before the requested radius."""

    def __init__(self, message, max_valid_radius):
        super().__init__(message)
        self.max_valid_radius = max_valid_radius


class IntegrationError(MongeLabError):
    pass


class FitError(MongeLabError):
    pass


class BracketError(MongeLabError):
    def __init__(self, message, attempts):
        super().__init__(message)
        self.attempts = attempts


class ConvexityCertificateError(MongeLabError):
    pass


class EmptySectionError(MongeLabError):
    pass


class DegenerateCloudError(MongeLabError):
    def __init__(self, message, direction):
        super().__init__(message)
        self.direction = direction


class BarrierHypothesisError(MongeLabError):
    def __init__(self, message, gap, point):
        super().__init__(message)
        self.gap = gap
        self.point = point


class ConfigError(MongeLabError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class StageError(MongeLabError):
    """A pipeline stage failed; ``stage`` names it and ``__cause__`` holds the original error."""

    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
