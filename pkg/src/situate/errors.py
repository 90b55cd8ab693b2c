"""Exception hierarchy shared by every layer of the engine."""


class SituateError(Exception):
    """Base class for all engine errors."""


class KBError(SituateError):
    """A knowledge-base declaration is malformed or inconsistent."""


class RestrictionConflict(KBError):
    """No restriction on a variable narrows all the others that apply to it."""


class RestrictionError(SituateError):
    """A value does not satisfy the restriction of the variable it is bound to."""

    def __init__(self, message, span=None):
        super().__init__(message if span is None else f"{message} (span {span[0]}-{span[1]})")
        self.span = span


class EventClassError(SituateError):
    """An operator was applied to an event of the wrong class."""


class ParseError(SituateError):
    """The analyzer could not build an analysis for the input."""


class UnresolvedPeg(ParseError):
    """A noun phrase was opened but never received its head."""


class UnresolvedReference(SituateError):
    """A definite description found no referent in strict mode."""


class InferenceLimit(SituateError):
    """Attached procedures recursed beyond the per-binding depth limit."""


class OracleLimit(SituateError):
    """An input is too large for exhaustive enumeration."""
