"""Exception types shared across the package."""


class FormatError(ValueError):
    """A file header or payload does not match the expected layout."""


class NumericalDiagnostic(RuntimeError):
    """A numerical routine gave up: iteration cap, order cap or norm drift.

    ``detail`` carries whatever the routine had when it stopped (last iterate,
    measured probability, drift value) so callers can report it.
    """

    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail


class ConvergenceError(NumericalDiagnostic):
    """Iterative solver hit its iteration cap before reaching tolerance."""
