"""Exception hierarchy shared by every module.

CLI exit codes are attached to the classes so the runner can map failures
without a lookup table.
"""


class ArrayNavError(Exception):
    exit_code = 3


class ConfigError(ArrayNavError):
    exit_code = 1


class DataError(ArrayNavError):
    exit_code = 2


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(DataError):
    pass


class OrderingError(DataError):
    pass


class EmptyStreamError(DataError):
    pass


class ScenarioError(ConfigError):
    pass


class NumericError(ArrayNavError):
    exit_code = 3


class InvalidRotationError(NumericError):
    pass


class DegenerateGeometryError(NumericError):
    pass


class AmbiguityError(NumericError):
    pass


class InvalidRecordError(NumericError):
    pass


class UnderdeterminedError(NumericError):
    pass


class IllConditionedError(NumericError):
    pass


class ConvergenceError(NumericError):
    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class InsufficientSatellitesError(NumericError):
    pass


class CombinatorialBlowupError(NumericError):
    pass


class SingularUpdateError(NumericError):
    pass


class InvalidStepError(NumericError):
    pass


class EmptyEpochError(NumericError):
    pass


class DestructiveInterferenceError(NumericError):
    pass
