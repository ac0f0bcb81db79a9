"""Exception hierarchy for spiralrecon."""


class ReconError(Exception):
    """Base class for every error raised by spiralrecon."""

    pass


class InvalidArgumentError(ReconError, ValueError):
    """Raised when an operation's precondition is violated."""

    pass


class TrajectoryFormatError(ReconError):
    """Raised when a trajectory CSV file cannot be parsed."""

    def __init__(self, message: str, line_number: int = 0) -> None:
        if line_number:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class ArrayFormatError(ReconError):
    """Raised when a binary array file is malformed."""

    pass


class ConsistencyError(ReconError):
    """Raised when an internal numerical consistency check fails."""

    pass


class GriddingError(ReconError):
    """Raised when gridding cannot proceed with the given configuration."""

    pass


class PhantomError(ReconError):
    """Raised for invalid phantom geometry."""

    pass


class CacheMismatchError(ReconError):
    """Raised when a cached kernel does not belong to the requested trajectory."""

    pass


class ConfigError(ReconError):
    """Raised for unreadable or inconsistent experiment configuration."""

    pass
