"""Exception hierarchy.

Every error carries the CLI exit code it maps to, so the command-line layer
never has to guess.
"""


class TripnetError(Exception):
    exit_code = 2


class ArgumentError(TripnetError, ValueError):
    pass


class ShapeError(TripnetError, ValueError):
    pass


class FormatError(TripnetError, ValueError):
    pass


class SchemaError(TripnetError, ValueError):
    pass


class DegenerateFeatureError(TripnetError, ValueError):
    pass


class ZeroActualError(TripnetError, ValueError):
    def __init__(self, index):
        super().__init__(f"actual value is zero at index {index}; MAPE is undefined there "
                         f"(use the 'exclude' zero policy to skip such rows)")
        self.index = index


class EmptyEvaluationError(TripnetError, ValueError):
    pass


class TuningError(TripnetError, RuntimeError):
    exit_code = 3


class NumericDivergenceError(TripnetError, ArithmeticError):
    exit_code = 3

    def __init__(self, message, epoch=None, batch=None):
        where = ""
        if epoch is not None:
            where = f" (epoch {epoch}, batch {batch})"
        super().__init__(message + where)
        self.epoch = epoch
        self.batch = batch


class ModelFileError(TripnetError, ValueError):
    pass


class VersionError(ModelFileError):
    pass


class CorruptionError(ModelFileError):
    def __init__(self, field, detail):
        super().__init__(f"corrupt model document: field {field!r}: {detail}")
        self.field = field
