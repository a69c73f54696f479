"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: validation-type errors exit 1,
transport errors exit 2.
"""


class CswitchError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(CswitchError):
    """Malformed or contract-violating input data."""


class TransportError(CswitchError):
    """Endpoint unreachable or returned a non-recoverable HTTP error."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class EmptyCompletionError(CswitchError):
    """The endpoint answered but the completion text was empty."""


class ScoreParseError(CswitchError):
    """A judge reply could not be mapped to integer scores."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class ScoreRangeError(CswitchError):
    """A parsed score fell outside the 1..3 rubric."""


class UndefinedMetricError(CswitchError):
    """The metric is mathematically undefined for this input."""


class InsufficientDataError(CswitchError):
    """Not enough data points to compute the requested statistic."""


class UnknownEvaluatorError(CswitchError):
    """Evaluator id is not registered with the annotation service."""


class ConflictError(CswitchError):
    """Duplicate submission or a submission against someone else's task."""


class LeaseExpiredError(CswitchError):
    """The task lease timed out before the rating arrived."""
