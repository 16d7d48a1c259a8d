"""Exception types raised by the estimators and the harness."""


class PUPriorError(Exception):
    """Base class for every error raised by this package."""


class InputError(PUPriorError, ValueError):
    """Malformed arguments: wrong shapes, out-of-range priors, bad files."""


class InvalidDeltaError(InputError):
    """Confidence parameter outside ``(0, delta_max]``."""


class DegenerateEmbeddingError(PUPriorError, ArithmeticError):
    """Positive and unlabeled mean maps are indistinguishable."""


class NumericalInconsistencyError(PUPriorError, ArithmeticError):
    """A quantity that must be a squared norm came out clearly negative."""


class InsufficientSampleError(PUPriorError):
    """Sample-size condition of the population bound is violated."""

    def __init__(self, message, minimal_n):
        super().__init__(message)
        self.minimal_n = minimal_n


class PluginFailureError(PUPriorError):
    """The source-prior plug-in estimate could not be computed."""
