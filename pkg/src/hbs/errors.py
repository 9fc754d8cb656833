"""Exception types shared across the library."""


class SketchError(Exception):
    """Base class for all sketch-related errors."""


class IncompatibleSketchError(SketchError, ValueError):
    """Two sketches cannot be combined because their parameters differ."""


class CorruptStateError(SketchError, RuntimeError):
    """An internal invariant does not hold, e.g. the unary length array
    disagrees with the codeword array, or a bit pattern matches no codeword."""


class FormatError(SketchError, ValueError):
    """A serialized container is malformed or truncated.

    ``offset`` is the byte position at which parsing failed, when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
