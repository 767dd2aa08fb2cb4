"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class EvaluationError(RuntimeError):
    """A numerical evaluation did not reach its requested tolerance."""

    def __init__(self, message, tol=None):
        super().__init__(message)
        self.tol = tol


class NumericalError(RuntimeError):
    """A linear solve broke down or produced an unacceptable residual."""

    def __init__(self, message, residual=None, condition=None):
        super().__init__(message)
        self.residual = residual
        self.condition = condition


class ConfigError(ValueError):
    """A run configuration is invalid. ``problems`` lists every violation."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))
