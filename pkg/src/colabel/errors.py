"""Exception types shared across the package."""


class ColabelError(Exception):
    """Base class for all errors raised by this package."""


class RejectedInput(ColabelError, ValueError):
    """An operation received input that violates its contract."""


class ConfigError(ColabelError, ValueError):
    """A configuration document failed validation.

    ``field`` is a dotted path into the offending document, e.g.
    ``"engine.tau_demote"``.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class ProtocolError(ColabelError):
    """A session event arrived out of order or against the wrong prompt."""


class CapabilityError(ColabelError):
    """The requested operation is not supported by this model kind."""


class CorruptLog(ColabelError):
    """A session log file is malformed or inconsistent at ``seq``."""

    def __init__(self, seq: int, message: str):
        super().__init__(f"seq {seq}: {message}")
        self.seq = seq
        self.message = message
