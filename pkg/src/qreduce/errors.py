__all__ = ["QReduceError", "DimensionError", "NotHermitianError", "StateError",
           "NullEventError", "AxiomError", "MeasurementError"]


class QReduceError(Exception):
    """Base class for all library errors."""


class DimensionError(QReduceError, ValueError):
    pass


class NotHermitianError(QReduceError, ValueError):
    pass


class StateError(QReduceError, ValueError):
    """Raised for unnormalized vectors or invalid density operators."""


class NullEventError(QReduceError, ValueError):
    """Raised when conditioning on an outcome set of (numerically) zero probability."""

    def __init__(self, probability: float):
        super().__init__(f"conditioning on null event (probability {probability:.3e})")
        self.probability = probability


class AxiomError(QReduceError, ValueError):
    """Raised when an instrument fails complete positivity, additivity or compatibility."""


class MeasurementError(QReduceError, ValueError):
    """Raised when an apparatus model does not measure the observable it claims to."""
