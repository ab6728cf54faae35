"""Exception hierarchy shared by all svlab modules."""


class SvlabError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(SvlabError, ValueError):
    """Invalid configuration: bad indices, unknown keys, incompatible options."""


class InputError(SvlabError, ValueError):
    """Caller-supplied data violates an operation's preconditions."""


class FormatError(SvlabError):
    """A serialized file is malformed. ``offset`` is the byte position."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class VersionError(FormatError):
    def __init__(self, found: int, supported: int):
        self.found = found
        self.supported = supported
        super().__init__(f"file format version {found} is newer than supported version {supported}")


class TrainingError(SvlabError):
    def __init__(self, message: str, step: int):
        self.step = step
        super().__init__(f"{message} at step {step}")


class DegenerateInputError(InputError):
    """Raised when a direction cannot be extracted (e.g. all-zero differences)."""
