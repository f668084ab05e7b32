"""Exception types raised by gelnet."""


class InputDomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigurationError(ValueError):
    """Invalid or inconsistent model/solver configuration."""


class SolverFailure(RuntimeError):
    """An inner solver could not make progress.

    ``diagnostics`` carries whatever state the solver had when it gave up.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class LibsvmParseError(ValueError):
    """Malformed line in a LIBSVM-format file."""

    def __init__(self, message, lineno):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno
