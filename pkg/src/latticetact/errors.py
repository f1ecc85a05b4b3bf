"""Exception hierarchy shared across the package."""


class LatticeTactError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InvalidInputError(LatticeTactError, ValueError):
    exit_code = 3


class ConfigError(LatticeTactError, ValueError):
    exit_code = 3


class CalibrationError(LatticeTactError):
    exit_code = 4


class TrainingError(LatticeTactError):
    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch

    exit_code = 4


class MeasurementError(LatticeTactError):
    exit_code = 4


class SimulationIntegrityError(LatticeTactError):
    exit_code = 5


class FrameError(LatticeTactError):
    exit_code = 6


class ChecksumError(FrameError):
    pass


class NeedMoreBytes(FrameError):
    """Raised when a buffer ends before a complete frame."""

    def __init__(self, needed):
        super().__init__(f"need {needed} more byte(s)")
        self.needed = needed


class BadMagic(FrameError):
    pass


class ModelFormatError(LatticeTactError):
    exit_code = 6
