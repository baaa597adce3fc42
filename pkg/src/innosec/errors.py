"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Matrix or vector shapes are inconsistent."""


class NumericError(ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""


class MomentOverflow(ArithmeticError):
    """A second-moment matrix grew past the configured trace limit.

    Raised instead of letting unstable dynamics produce ``inf``/``nan``
    silently.
    """

    def __init__(self, k, trace, limit):
        self.k = k
        self.trace = trace
        self.limit = limit
        super().__init__(
            f"moment trace {trace:.3e} exceeds limit {limit:.1e} at k={k}"
        )


class ConfigError(ValueError):
    """A scenario configuration is malformed or out of range."""


class ContractViolation(RuntimeError):
    """A caller broke a documented precondition, e.g. missing decode metadata."""
