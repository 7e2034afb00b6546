"""Exception types shared across the engine."""


class EngineError(Exception):
    """Base class for all engine failures."""


class BudgetExceeded(EngineError):
    """A term or a rule derivation needs more fresh channels than allowed."""


class CarrierMismatch(EngineError):
    """A relation was supplied over a carrier the structure was not built for."""


class SilentAxiomsViolated(EngineError):
    """Fuse derivation was requested for a silence relation that fails its axioms."""


class IncompleteStates(EngineError):
    """An operation touched states whose outgoing transitions are not fully known."""


class Unrepresentable(EngineError):
    """A canonical term cannot be printed in the surface grammar."""


class ChannelExpected(EngineError):
    """A non-channel value flowed into a channel position."""


class UnknownTableValue(EngineError):
    """A table-backed continuation was queried outside its recorded rows."""


class SourceError(EngineError):
    """A problem in surface-syntax input, carrying a source position."""

    def __init__(self, message, line, column):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class ParseError(SourceError):
    """Input text does not conform to the grammar."""


class UnboundIdentifier(SourceError):
    """An identifier does not resolve to any declared channel or binder."""
