"""Exception hierarchy shared across the pipeline.

Two roots matter for the CLI exit-code contract: ``ConfigError`` maps to
exit code 2 (usage/config problems), everything else derived from
``FatigueLabError`` maps to exit code 1 (computation failures).
"""


class FatigueLabError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FatigueLabError):
    """Bad configuration, bad CLI usage, or missing input files."""


# --- signal IO ---------------------------------------------------------


class EmptyFileError(FatigueLabError):
    pass


class BadHeaderError(FatigueLabError):
    pass


class MissingChannelError(FatigueLabError):
    def __init__(self, channel: str):
        super().__init__(f"required channel column missing: {channel}")
        self.channel = channel


class NonNumericSampleError(FatigueLabError):
    def __init__(self, row: int, column: str, value: str):
        super().__init__(f"non-numeric sample at row {row}, column {column!r}: {value!r}")
        self.row = row
        self.column = column


# --- dsp ----------------------------------------------------------------


class InvalidBandEdgesError(FatigueLabError):
    pass


class SignalTooShortError(FatigueLabError):
    pass


class TooShortError(FatigueLabError):
    pass


class EmptyBandError(FatigueLabError):
    pass


# --- topomap ------------------------------------------------------------


class BadMontageFileError(FatigueLabError):
    pass


class NonFiniteValueError(FatigueLabError):
    pass


class WrongInputSizeError(FatigueLabError):
    pass


class UnfittedNormalizerError(FatigueLabError):
    pass


# --- cnn ----------------------------------------------------------------


class ShapeMismatchError(FatigueLabError):
    pass


class TooSmallError(FatigueLabError):
    pass


class NoCachedForwardError(FatigueLabError):
    pass


class EmptyTrainingSetError(FatigueLabError):
    pass


class MixedCombinationsError(FatigueLabError):
    pass


# --- classifiers --------------------------------------------------------


class SingleClassError(FatigueLabError):
    pass


class SingularSystemError(FatigueLabError):
    pass


class NoConvergenceWarning(UserWarning):
    """Solver hit its iteration cap; the model is still returned."""


class MissingClassError(FatigueLabError):
    pass


class KTooLargeError(FatigueLabError):
    pass


class ClassTooSmallError(FatigueLabError):
    pass


class EmptyDataError(FatigueLabError):
    pass


# --- evaluation ---------------------------------------------------------


class KExceedsNError(FatigueLabError):
    pass


class LengthMismatchError(FatigueLabError):
    pass


class BadLabelError(FatigueLabError):
    pass
