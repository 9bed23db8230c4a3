'''Exception types raised by the workbench.'''


class HLCError(Exception):
    """Base class for every error the workbench raises on purpose."""


class WorldParseError(HLCError, ValueError):
    """A world file line could not be parsed."""

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class WorldValidationError(HLCError, ValueError):
    """A parsed world violates a World invariant."""


class DegenerateOriginError(HLCError, ValueError):
    """A ray origin lies on a wall or outside the world bounds."""


class ClassifierTrainingError(HLCError, ValueError):
    """The room/passage classifier cannot be learned from the given samples."""


class ClassifierParseError(HLCError, ValueError):
    """A serialized classifier is malformed."""


class UnreachableError(HLCError):
    """No path exists between the requested endpoints."""


class NoModelError(HLCError):
    """The skeleton has no regions to plan with."""


class NoInitialStretchError(HLCError):
    """The initial rotation found no stretch to explore."""


class WorldTooClutteredError(HLCError):
    """Rejection sampling could not find free space."""


class UnknownRegionError(HLCError, KeyError):
    """A region id is not in the skeleton."""


class ConfigError(HLCError, ValueError):
    """An experiment configuration file or value is invalid."""


class ArtifactError(HLCError, ValueError):
    """An artifact file has an unknown type or a malformed line."""
