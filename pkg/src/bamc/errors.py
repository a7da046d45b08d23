"""Exception hierarchy shared by every module."""


class BamcError(Exception):
    """Base class for all library errors."""


class NotStochastic(BamcError, ValueError):
    pass


class NotErgodic(BamcError, ValueError):
    pass


class NoConvergence(BamcError, RuntimeError):
    pass


class NotReversible(BamcError):
    """Signal raised by :func:`bamc.markov.spectral_gap` for non-reversible chains.

    Not a fault: callers fall back to the pseudo-spectral gap.
    """


class DegenerateInstance(BamcError, ValueError):
    pass


class NoSamples(BamcError, ValueError):
    pass


class NotSampled(BamcError, ValueError):
    pass


class InvalidConfig(BamcError, ValueError):
    pass


class BudgetTooSmall(BamcError, ValueError):
    pass


class GenerationFailed(BamcError, RuntimeError):
    pass


class ParseError(BamcError, ValueError):
    """Malformed JSON; ``line`` and ``column`` locate the problem."""

    def __init__(self, message, line=None, column=None):
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{loc}")
        self.line = line
        self.column = column


class SchemaError(BamcError, ValueError):
    """Well-formed JSON that violates the documented schema; ``field`` names the culprit."""

    def __init__(self, field, message, line=None):
        loc = f" (line {line})" if line is not None else ""
        super().__init__(f"{field}: {message}{loc}")
        self.field = field
        self.line = line
