"""Exception hierarchy shared by every subpackage."""


class TSTransferError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(TSTransferError, ValueError):
    pass


class ParameterError(TSTransferError, ValueError):
    pass


class NumericFailure(TSTransferError, FloatingPointError):
    """A NaN/Inf appeared, or a normalisation denominator vanished."""

    def __init__(self, message, epoch=None):
        if epoch is not None:
            message = f"{message} (epoch {epoch})"
        super().__init__(message)
        self.epoch = epoch


class StateError(TSTransferError, RuntimeError):
    pass


class ContractError(TSTransferError, ValueError):
    pass


class FormatError(TSTransferError, ValueError):
    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DegenerateInstanceError(TSTransferError, ValueError):
    pass


class DegenerateSampleError(TSTransferError, ValueError):
    pass


class SurgeryError(TSTransferError, ValueError):
    pass


class ConfigError(TSTransferError, ValueError):
    pass
