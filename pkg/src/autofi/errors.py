"""Exception types shared across the toolkit.

Invalid *data* inside a test case is reported through return values
(see model.ValidationResult), never through these exceptions. The
exceptions here mark structural problems: malformed inputs, broken
configuration, transport failures, and contract violations at run
boundaries.
"""


class AutofiError(Exception):
    """Base class for all toolkit errors."""


class FormatError(AutofiError):
    """A text payload does not satisfy a structural contract.

    Raised when a provider response (or any candidate JSON) cannot be
    parsed into the expected shape. Callers treat this as retriable or
    scoreable-as-wrong, never fatal.
    """


class ConfigError(AutofiError):
    """Configuration violates a documented constraint (bad grid value,
    missing path, missing API key, malformed config file)."""


class TransportError(AutofiError):
    """The provider endpoint could not be reached or answered with a
    transport-level failure (network error, timeout, HTTP >= 400)."""


class FixtureMiss(AutofiError):
    """A prompt digest has no recorded response in the fixture file."""

    def __init__(self, digest: str):
        super().__init__(f"no recorded response for prompt digest {digest}")
        self.digest = digest


class UnknownChannel(AutofiError):
    """A fault test case targets a bus channel the simulator does not publish."""

    def __init__(self, channel: str):
        super().__init__(f"unknown bus channel: {channel}")
        self.channel = channel


class ConcurrencyBoundExceeded(AutofiError):
    """Three or more fault locations would be active at the same instant."""


class TimeBaseMismatch(AutofiError):
    """Two traces do not share the same time base or channel set."""


class DigestMismatch(AutofiError):
    """A golden trace was produced from different cycle/plant inputs than
    the current run and cannot serve as its baseline."""


class LengthMismatch(AutofiError):
    """Prediction and gold sequences have different lengths."""


class EmptyInput(AutofiError):
    """A metric was asked to score an empty prediction set or class set."""


class UnsupportedFormat(AutofiError):
    """A report cannot be rendered in the requested output format."""
