"""Exception hierarchy shared across the package."""


class MMLError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(MMLError, ValueError):
    pass


class AliasingRiskError(MMLError):
    """Pointwise products of the manufactured field would alias on the grid."""


class DatasetDecodeError(MMLError):
    pass


class BadMagicError(DatasetDecodeError):
    pass


class VersionMismatchError(DatasetDecodeError):
    pass


class TruncatedPayloadError(DatasetDecodeError):
    pass


class ShapeOverflowError(DatasetDecodeError):
    pass


class DivergedError(MMLError):
    def __init__(self, epoch: int, batch: int, value: float):
        super().__init__(f"non-finite loss {value!r} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


class BlowUpError(MMLError):
    def __init__(self, step: int):
        super().__init__(f"integrator state became non-finite at step {step}")
        self.step = step


class UndefinedMetricError(MMLError, ZeroDivisionError):
    pass


class ConfigError(MMLError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.key = key
