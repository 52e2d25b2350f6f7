"""Exception types shared by the models and the harness."""


class DomainError(ValueError):
    """A state left the admissible set (e.g. non-positive temperature)."""


class BlowUpError(RuntimeError):
    """The explicit integrator produced samples far beyond the initial scale."""


class ConvergenceError(RuntimeError):
    """An iterative solve did not reach its tolerance."""


class NotACycleError(ValueError):
    """A process does not return close enough to its initial state."""


class ConfigError(ValueError):
    """Invalid scenario configuration."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)
