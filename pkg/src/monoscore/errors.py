"""Exception hierarchy shared by every module."""


class MonoScoreError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(MonoScoreError, ValueError):
    """A file or line does not follow its text format.

    ``path`` and ``lineno`` are filled in when the failure can be located.
    """

    def __init__(self, message, path=None, lineno=None):
        self.message = message
        self.path = path
        self.lineno = lineno
        super().__init__(str(self))

    def __str__(self):
        where = ""
        if self.path is not None and self.lineno is not None:
            where = f"{self.path}:{self.lineno}: "
        elif self.path is not None:
            where = f"{self.path}: "
        elif self.lineno is not None:
            where = f"line {self.lineno}: "
        return where + self.message


class SingularSystemError(MonoScoreError, ArithmeticError):
    """The least-squares normal equations have no unique solution."""


class OOVError(MonoScoreError, KeyError):
    """A token required by an operation has no vector."""

    def __str__(self):
        return Exception.__str__(self)


class UnscorableError(MonoScoreError):
    """A pair cannot be scored under the drop-pair policy."""


class ErrorCapExceeded(MonoScoreError):
    """Streaming collected more malformed lines than allowed."""
