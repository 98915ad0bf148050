"""Exception types shared across the package; the CLI maps them to exit codes."""


class ValidationError(ValueError):
    """Malformed or out-of-range user input."""


class DomainError(ValueError):
    """A quantity fell outside its mathematical domain (e.g. nu < 1)."""


class ConsistencyError(RuntimeError):
    """Two computation paths that must agree did not."""
