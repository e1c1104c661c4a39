"""Exception types shared across the package."""


class FormatError(ValueError):
    """Malformed input file; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NoDataError(ValueError):
    """An estimator was asked to average over an empty sample."""


class DomainError(ValueError):
    """Inputs outside the mathematical domain of an operation."""
