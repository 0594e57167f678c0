"""Exception hierarchy shared by all modules."""


class LikqError(Exception):
    """Base class for every error raised by this package."""


class ParseError(LikqError):
    """Malformed expression text.

    ``position`` is the 1-based column at which the problem was detected.
    """

    def __init__(self, message, position):
        super().__init__(f"{message} (at column {position})")
        self.message = message
        self.position = position


class DomainError(LikqError, ArithmeticError):
    """An expression was evaluated outside the domain of one of its nodes."""

    def __init__(self, message, node=None):
        super().__init__(message if node is None else f"{message} in {node}")
        self.message = message
        self.node = node


class SwitchingError(DomainError):
    """Domain error raised while forward-substituting switching component ``component`` (1-based)."""

    def __init__(self, component, cause):
        LikqError.__init__(self, f"switching component {component}: {cause}")
        self.message = cause.message
        self.node = cause.node
        self.component = component


class ValidationError(LikqError):
    def __init__(self, findings):
        super().__init__("; ".join(findings))
        self.findings = list(findings)


class InfeasibleError(LikqError):
    """The point violates ``g >= 0`` or ``h = 0`` beyond the activity tolerance."""

    def __init__(self, message, constraint=None, value=None):
        super().__init__(message)
        self.constraint = constraint
        self.value = value


class OracleInapplicableError(LikqError):
    """A finite-difference stencil touched a kink."""


class NotInStratifiedSetError(LikqError):
    pass


class IncompatibleSignatureError(LikqError, ValueError):
    pass


class ProblemFileError(LikqError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.message = message
        self.line = line


class ProbeError(LikqError):
    """Evaluation failed at segment parameter ``t`` during a kink scan."""

    def __init__(self, t, cause):
        super().__init__(f"at t = {t!r}: {cause}")
        self.t = t
        self.cause = cause
