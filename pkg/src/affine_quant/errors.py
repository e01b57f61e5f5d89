"""Exception types shared across the package."""


class DomainError(ValueError):
    """Invalid domain, grid or point relative to a domain."""


class TruncationNotNeeded(DomainError):
    """Raised when a truncation radius is requested for a bounded domain
    or for a potential that does not grow."""


class ConvergenceError(RuntimeError):
    """A numerical procedure failed to converge.

    ``index`` carries the offending eigenvalue index (or ladder step) when known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
