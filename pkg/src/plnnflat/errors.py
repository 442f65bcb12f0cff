"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class PLNNError(Exception):
    """Base class for all package errors."""


class ShapeError(PLNNError, ValueError):
    """Input dimensions do not match the network or each other."""


class DataError(PLNNError, ValueError):
    """Malformed or unusable data (parse errors, bad labels, degenerate splits)."""


class TrainingDataError(DataError):
    """Training data is empty or contains a single class."""


class NumericError(PLNNError, ArithmeticError):
    """A numeric procedure cannot produce a defined result."""


class ZeroVarianceError(NumericError):
    pass


class UndefinedSimilarityError(NumericError):
    pass
