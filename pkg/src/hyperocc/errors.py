"""Exception taxonomy shared by every module.

Each class carries the process exit code the CLI maps it to, so library
errors and command-line errors stay in one place.
"""


class HyperOCCError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(HyperOCCError):
    """Invalid configuration or argument combination."""

    exit_code = 2


class DataError(HyperOCCError):
    """Invalid or inconsistent input data."""

    exit_code = 3


class NumericError(HyperOCCError):
    """Non-finite or otherwise unusable numeric state."""

    exit_code = 4


class IOFailure(HyperOCCError):
    """Filesystem-level failure (missing file, unreadable path)."""

    exit_code = 5


class ZeroCenterError(ConfigError):
    """A center with zero (or forbidden) norm was requested or derived."""


class UndefinedAUCError(DataError):
    """AUC requested for a score set with fewer than two classes."""


class FormatError(DataError):
    """Malformed binary payload. Subclasses pin down the first defect found."""


class BadMagicError(FormatError):
    pass


class UnsupportedVersionError(FormatError):
    pass


class TruncatedError(FormatError):
    pass


class BadLabelError(FormatError):
    pass


class BadMaskError(FormatError):
    pass


class InvalidFeatureSetError(DataError):
    """Raised when writing a feature set that fails validation.

    ``codes`` lists the issue codes that blocked the write.
    """

    def __init__(self, issues):
        self.issues = list(issues)
        self.codes = [i.code for i in self.issues]
        super().__init__(
            "feature set failed validation: " + ", ".join(str(i) for i in self.issues)
        )
