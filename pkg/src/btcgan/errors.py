"""Exception types shared across the package."""


class BtcganError(Exception):
    """Base class for all package errors."""


class ConfigurationError(BtcganError, ValueError):
    """A structural problem: bad shapes, unknown option, invalid setting."""


class InputError(BtcganError, ValueError):
    """Caller passed data that violates an operation's preconditions."""


class ValidationError(InputError):
    """A record or dataset breaks a documented invariant."""


class StateError(BtcganError, RuntimeError):
    """Operation called in the wrong order (e.g. backward before forward)."""


class ParseError(BtcganError, ValueError):
    """A file could not be parsed; message names line and column."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class TrainingDivergenceError(BtcganError, RuntimeError):
    """Training produced a non-finite loss; carries the offending epoch."""

    def __init__(self, message, epoch):
        super().__init__(message)
        self.epoch = epoch
