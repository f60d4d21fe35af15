"""Exception hierarchy shared by every module."""


class SpixctError(Exception):
    """Base class for all package errors."""


class InvalidArgument(SpixctError, ValueError):
    """A caller-supplied value violates an operation's precondition."""


class ParseError(SpixctError, ValueError):
    """A file could not be parsed; ``line`` is the 1-based offending line."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class NumericalError(SpixctError, ArithmeticError):
    """Overflow or a non-finite intermediate."""


class DivergedError(NumericalError):
    """Raised by the solver when the residual becomes non-finite.

    The partial :class:`~spixct.solver.SolveReport` is kept on ``report``.
    """

    def __init__(self, message, report=None, image=None):
        super().__init__(message)
        self.report = report
        self.image = image
