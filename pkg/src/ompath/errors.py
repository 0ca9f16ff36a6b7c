"""Exception types shared across the package."""


class OMPathError(Exception):
    """Base class for all package-specific errors."""


class InvalidPathError(OMPathError, ValueError):
    """A grid path violates the constraints of the functional it was handed to."""


class IntegrationDivergedError(OMPathError, RuntimeError):
    """The SDE integrator produced a non-finite state.

    Carries the index of the offending step in ``step``.
    """

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"integration diverged at step {step}")


class StagnationError(OMPathError, RuntimeError):
    """An optimiser run stopped without meeting its gradient tolerance."""


class FitError(OMPathError, ValueError):
    """Not enough usable points to fit a power law."""
