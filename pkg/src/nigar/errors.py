"""Exception hierarchy used across the package."""


class NigarError(Exception):
    """Base class for every error raised by :mod:`nigar`."""


class DomainError(NigarError, ValueError):
    """Argument outside the mathematical domain of a function."""


class ParameterError(NigarError, ValueError):
    """Invalid distribution or model parameters."""


class TooShortError(NigarError, ValueError):
    """Series has fewer observations than an operation needs."""


class ConstantSeriesError(NigarError, ValueError):
    """Series has no variation, so a ratio estimator is undefined."""


class ZeroVarianceError(NigarError, ValueError):
    """Sample variance is zero."""


class EmptySampleError(NigarError, ValueError):
    pass


class DegenerateWeightsError(NigarError, ArithmeticError):
    """E-step weights satisfy ``mean(s) * mean(w) <= 1``; the scale update is undefined."""


class SingularSystemError(NigarError, ArithmeticError):
    pass


class NonFiniteLikelihoodError(NigarError, ArithmeticError):
    """The observed-data log-likelihood became NaN or infinite.

    The partial iteration trace is kept on ``trace`` for post-mortem.
    """

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class IngestError(NigarError):
    """Base class for CSV ingestion failures."""


class MissingFileError(IngestError, FileNotFoundError):
    pass


class MissingColumnError(IngestError, KeyError):
    def __init__(self, column, available):
        self.column = column
        self.available = list(available)
        super().__init__(
            f"column {column!r} not found; available columns: {', '.join(self.available)}"
        )

    def __str__(self):
        return self.args[0]


class EmptyAfterCleaningError(IngestError, ValueError):
    pass


class UnparseableDateError(IngestError, ValueError):
    def __init__(self, rows):
        self.rows = list(rows)
        shown = ", ".join(f"line {line}: {text!r}" for line, text in self.rows[:5])
        more = "" if len(self.rows) <= 5 else f" (+{len(self.rows) - 5} more)"
        super().__init__(f"{len(self.rows)} unparseable date(s): {shown}{more}")
