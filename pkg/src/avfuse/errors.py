"""Exception types shared across the package."""


class AvFuseError(Exception):
    """Base class for all package errors."""


class InvalidInput(AvFuseError, ValueError):
    """An operation received data violating its preconditions."""


class AlignmentFailure(InvalidInput):
    """A frame timestamp lies too far outside the audio clip span."""

    def __init__(self, frame_index: int, message: str):
        super().__init__(message)
        self.frame_index = frame_index


class InvalidConfig(AvFuseError, ValueError):
    """Configuration is malformed or inconsistent.

    ``problems`` carries every failure found so a run can report them all
    before refusing to start.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class NotTrained(AvFuseError, RuntimeError):
    """A model was used for scoring or inference before training."""
