"""Exception hierarchy shared by all modules."""


class ExcoefError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(ExcoefError, ValueError):
    pass


class InvalidSubset(InvalidArgument):
    pass


class TooLarge(ExcoefError):
    """Ground set exceeds the cap of an operation."""


class NotCompletelyAlternating(ExcoefError):
    def __init__(self, report):
        self.report = report
        n = len(report.violations)
        super().__init__(f"set function is not a valid extremal coefficient function ({n} violations)")


class DegenerateMarginal(ExcoefError):
    pass


class DegenerateTransform(ExcoefError):
    pass


class BoundTooSmall(ExcoefError):
    pass


class InsufficientExceedances(ExcoefError):
    def __init__(self, count: int, required: int):
        self.count = count
        self.required = required
        super().__init__(f"only {count} exceedances of the conditioning threshold, need {required}")


class FormatError(ExcoefError):
    """Malformed input file; ``key`` names the offending entry when known."""

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(message if key is None else f"{message} (key {key!r})")
