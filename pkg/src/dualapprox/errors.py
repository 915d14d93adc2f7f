"""Exception types shared across the package."""


class DualApproxError(Exception):
    """Base class for package errors."""


class PreconditionError(DualApproxError, ValueError):
    """An operation was called outside its documented domain."""


class CurveError(PreconditionError):
    """A curve fails its convexity certificate or is unknown."""


class RootBracketError(DualApproxError, RuntimeError):
    """A monotone root solve lost its bracket.

    This only happens when an extension is broken, so it is treated as an
    internal error rather than bad input.
    """


class BudgetExceeded(DualApproxError):
    """Estimated work exceeds the configured item budget."""

    def __init__(self, estimated, limit, what="items"):
        self.estimated = int(estimated)
        self.limit = int(limit)
        super().__init__(f"budget exceeded: {self.estimated} {what} > limit {self.limit}")
