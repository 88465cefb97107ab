"""Exception hierarchy shared by every lenspot module."""


class LenspotError(Exception):
    """Base class for all errors raised by lenspot."""


class DegenerateGeometry(LenspotError, ValueError):
    """A polygon or quad has zero-length edges or zero extent."""


class BadPointCount(LenspotError, ValueError):
    """A polygon has the wrong number of points for the requested operation."""


class ParseError(LenspotError, ValueError):
    """Malformed annotation or prediction input.

    ``path`` and ``line`` carry the location when known.
    """

    def __init__(self, message, path=None, line=None):
        self.message = message
        self.path = path
        self.line = line
        super().__init__(str(self))

    def __str__(self):
        where = ""
        if self.path is not None:
            where = f"{self.path}"
            if self.line is not None:
                where += f":{self.line}"
            where += ": "
        return where + self.message


class ValidationError(LenspotError, ValueError):
    """Well-formed input that violates a data invariant.

    ``problems`` lists one human-readable entry per offending item.
    """

    def __init__(self, message, problems=()):
        self.problems = list(problems)
        detail = "".join(f"\n  - {p}" for p in self.problems)
        super().__init__(message + detail)


class IoError(LenspotError, OSError):
    """A dataset or prediction path cannot be read."""


class IgnoredInstance(LenspotError, ValueError):
    """An operation needs a transcription but the instance is marked ``###``."""


class OutOfRange(LenspotError, ValueError):
    """A character count lies outside ``[1, N_max]``."""


class ShapeMismatch(LenspotError, ValueError):
    """Two grids that must share a shape do not."""


class InfeasibleMatrix(LenspotError, ValueError):
    """An assignment problem has fewer predictions than targets or non-finite costs."""


class EmptySequence(LenspotError, ValueError):
    """A sequence loss was requested for an empty sequence."""


class MissingLexicon(LenspotError, ValueError):
    """Full-lexicon evaluation was requested without a lexicon."""
