"""Exception hierarchy shared by every cattle_clip module.

The CLI maps each family to an exit code, see ``EXIT_CODES``.
"""


class CattleClipError(Exception):
    """Base class for all errors raised by cattle_clip"""

    exit_code = 1


class ConfigError(CattleClipError):
    """Invalid configuration or command-line usage"""

    exit_code = 1


class DataError(CattleClipError, ValueError):
    """Malformed or inconsistent input data"""

    exit_code = 2


class CheckpointError(DataError):
    """A checkpoint archive is unreadable or does not match the model"""


class NumericalError(CattleClipError, ArithmeticError):
    """Non-finite activations, losses or gradients"""

    exit_code = 3


EXIT_CODES = {
    "ok": 0,
    "usage": ConfigError.exit_code,
    "data": DataError.exit_code,
    "numeric": NumericalError.exit_code,
}
