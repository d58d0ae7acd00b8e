"""Exception types shared across covlab modules."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SizeError(ValueError):
    """A dense object would exceed the size cap of an oracle-only routine."""


class NumericFailure(ArithmeticError):
    """An iterative method did not reach its tolerance.

    ``iterations`` and ``error_estimate`` carry the state at the time of failure.
    """

    def __init__(self, message, iterations=None, error_estimate=None):
        super().__init__(message)
        self.iterations = iterations
        self.error_estimate = error_estimate


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""
