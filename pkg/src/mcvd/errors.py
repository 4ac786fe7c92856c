"""Exception types shared across the package."""


class McvdError(Exception):
    """Base class for package errors."""


class ConfigError(McvdError):
    """Invalid or inconsistent configuration.

    ``violations`` collects every failed invariant so a bad config file is
    reported in one pass.
    """

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class NumericalError(McvdError):
    """A numerical procedure failed (no bracket, degenerate input, ...)."""


class ApproximationBreakdown(NumericalError):
    """The closed-form reusable-duration approximation produced an invalid
    intermediate (negative discriminant, non-positive root, degenerate ratio).

    The offending intermediates are attached for diagnosis rather than being
    silently patched.
    """

    def __init__(self, message, intermediates=None):
        super().__init__(message)
        self.intermediates = dict(intermediates or {})
