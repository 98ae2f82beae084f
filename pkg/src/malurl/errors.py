"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to:
2 for configuration/schema problems, 3 for data problems, 4 for training.
"""


class MalurlError(Exception):
    exit_code = 1


class ConfigError(MalurlError):
    exit_code = 2


class SchemaError(MalurlError):
    exit_code = 2


class DataError(MalurlError):
    exit_code = 3


class ParseError(DataError):
    pass


class LabelError(DataError):
    pass


class StratificationError(DataError):
    pass


class FoldError(DataError):
    pass


class ResampleError(DataError):
    pass


class ShapeError(DataError):
    pass


class TrainingError(MalurlError):
    exit_code = 4


class FitError(TrainingError):
    pass


class SearchError(TrainingError):
    pass
