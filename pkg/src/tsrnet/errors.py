"""Exception types shared across the package."""


class TsrnetError(Exception):
    """Base class for all package errors."""


class DataIntegrityError(TsrnetError, ValueError):
    """Input data is malformed (non-finite samples, bad shapes, ...)."""


class WfdbFormatError(TsrnetError):
    """A WFDB record could not be decoded."""

    def __init__(self, record_id, message):
        super().__init__(f"{record_id}: {message}")
        self.record_id = record_id


class UnsupportedFormatError(WfdbFormatError):
    pass


class LeadCountError(WfdbFormatError):
    pass


class TruncatedSignalError(WfdbFormatError):
    pass


class ConfigError(TsrnetError, ValueError):
    """Invalid run or network configuration."""


class NonFiniteError(TsrnetError, FloatingPointError):
    """A NaN or infinity appeared where finite values are required."""


class CheckpointError(TsrnetError):
    pass
