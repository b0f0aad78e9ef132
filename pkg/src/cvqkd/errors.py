"""Exception types shared across the simulator."""


class CvqkdError(Exception):
    """Base class for all simulator errors."""


class InvalidConfigError(CvqkdError, ValueError):
    """A configuration value violates its contract."""


class TooFewSamplesError(CvqkdError, ValueError):
    """An estimator was given fewer samples than it needs."""


class InsufficientDataError(CvqkdError, ValueError):
    """A data stream is too short to process."""


class NumericalFailureError(CvqkdError, RuntimeError):
    """Numerical integration did not reach the requested tolerance."""

    def __init__(self, message, achieved_tol=None):
        super().__init__(message)
        self.achieved_tol = achieved_tol


class VerificationFailedError(CvqkdError, RuntimeError):
    """Alice's and Bob's strings still differ after error correction."""


class ProtocolError(CvqkdError, RuntimeError):
    """The classical-channel protocol was violated."""


class ProtocolAbort(CvqkdError, RuntimeError):
    """The session was aborted by either party."""
