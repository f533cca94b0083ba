"""Exception hierarchy shared across the package."""


class MotionAgentError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(MotionAgentError):
    """Input data violates a documented invariant (non-finite values, bad shapes, ...)."""


class ConfigError(MotionAgentError):
    """A configuration value is missing or inconsistent."""


class FormatError(MotionAgentError):
    """An on-disk artifact is malformed. Carries the byte offset when known."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class LengthError(MotionAgentError):
    """A sequence length does not satisfy the codec's divisibility contract."""


class VocabularyError(MotionAgentError):
    """A token id falls outside the vocabulary it is used with."""


class DivergenceError(MotionAgentError):
    """Training produced a non-finite loss or gradient."""


class ContractViolationError(MotionAgentError):
    """A frozen tensor received gradient or changed bytes during fine-tuning."""


class GenerationError(MotionAgentError):
    """Autoregressive decoding produced an unusable result (e.g. empty caption)."""


class PlanFormatError(MotionAgentError):
    """The planner reply could not be parsed into a valid plan, even after repair.

    ``raw_reply`` carries the verbatim planner output for diagnostics.
    """

    def __init__(self, message: str, raw_reply: str = ""):
        super().__init__(message)
        self.raw_reply = raw_reply


class PlannerTransportError(MotionAgentError):
    """The remote planner endpoint could not be reached or returned a bad status."""


class SessionError(MotionAgentError):
    """A turn referenced an unknown session or motion id."""


class NumericalError(MotionAgentError):
    """A numerical routine failed to converge; message carries diagnostics."""


class InsufficientSamplesError(MotionAgentError):
    """A metric was asked to run on fewer samples than its definition needs."""
