"""Exception types shared across the package."""


class PresdecError(Exception):
    """Base class for errors raised by this package."""


class ResourceLimit(PresdecError):
    """A configured node, time or size budget was exhausted (not a verdict)."""


class BackendFailure(PresdecError):
    """The external solver crashed, timed out or produced unusable output."""


class NotDecomposable(PresdecError):
    """A decomposition was requested for a formula that has none."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class EquivalenceCheckFailed(PresdecError):
    """A constructed decomposition is not equivalent to its input (a bug)."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class TooManyVariables(PresdecError):
    """The request exceeds a hard size limit."""


class ParseError(PresdecError):
    """Base class for SMT-LIB input errors; carries the source span."""

    def __init__(self, message: str, span=None):
        where = f" at {span}" if span is not None else ""
        super().__init__(f"{message}{where}")
        self.span = span


class SmtSyntaxError(ParseError):
    pass


class NonlinearTerm(ParseError):
    pass


class UnsupportedSort(ParseError):
    pass
