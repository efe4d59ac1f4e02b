"""Exception types shared across the package."""


class InvalidNetworkError(ValueError):
    """Raised when a network (or shock) breaks one of the model invariants.

    The individual violations are kept on ``violations`` so callers can
    report every broken constraint, not just the first one.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        text = "; ".join(str(v) for v in self.violations[:5])
        if len(self.violations) > 5:
            text += f"; ... ({len(self.violations) - 5} more)"
        super().__init__(text or "invalid network")


class FormatError(ValueError):
    """Malformed interchange file (bad JSON, unknown fields, wrong types)."""


class InstanceTooLargeError(ValueError):
    """An exhaustive routine was asked to run beyond its size cap."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit ``max_iterations`` before reaching tolerance."""
