from typing import Optional


class PerturbEvalError(Exception):
    """Base class for every error raised by this project."""


class ShapeMismatchError(PerturbEvalError, ValueError):
    pass


class InvalidClassError(PerturbEvalError, ValueError):
    pass


class UnknownLayerError(PerturbEvalError, KeyError):
    pass


class StaleCaptureError(PerturbEvalError, RuntimeError):
    """Layer capture requested before a forward/backward pass populated it."""


class InvalidMapError(PerturbEvalError, ValueError):
    pass


class AttackFailedError(PerturbEvalError, ValueError):
    pass


class UndefinedStatisticError(PerturbEvalError, ValueError):
    """A statistic is undefined for its input (zero variance, too few items, zero denominator)."""


class DatasetFormatError(PerturbEvalError, ValueError):
    pass


class ConfigError(PerturbEvalError, ValueError):
    pass


class StageError(PerturbEvalError):
    def __init__(self, stage: str, cause: Optional[BaseException] = None):
        self.stage = stage
        self.cause = cause
        message = f"stage '{stage}' failed"
        if cause is not None:
            message += f": {cause}"
        super().__init__(message)
