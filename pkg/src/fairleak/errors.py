"""Exception hierarchy shared by all fairleak modules."""


class FairleakError(Exception):
    """Base class for every error raised by this package."""


class EmptyGroupError(FairleakError, ValueError):
    """A metric needs both groups (or both positive sub-groups) to be non-empty."""


class DomainError(FairleakError, ValueError):
    """A parameter lies outside the domain where a formula is defined."""


class RankDeficientError(FairleakError, ValueError):
    """The system matrix does not have full column rank.

    Attributes
    ----------
    column : int
        Zero-based index of the first column whose pivot vanished.
    """

    def __init__(self, column: int, pivot: float):
        self.column = column
        self.pivot = pivot
        super().__init__(
            f"matrix is rank deficient: pivot for column {column} is {pivot:.3e}"
        )


class InfeasibleError(FairleakError):
    """No vector satisfies the linear constraints within tolerance."""


class NonConvergenceError(FairleakError):
    """An iterative routine hit its iteration limit."""


class DegenerateColumnError(FairleakError):
    """Greedy pursuit found no column correlated with a non-negligible residual."""


class ZeroResponseError(FairleakError, ValueError):
    """A probe query came back as exactly zero and cannot be inverted."""


class AmbiguousResponseError(FairleakError, ValueError):
    """A query answer matches none of the expected candidate values."""


class DataFormatError(FairleakError, ValueError):
    """Malformed tabular input.

    Attributes
    ----------
    line : int or None
        One-based line number in the source file, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DivergenceError(FairleakError):
    """Model training produced a non-finite loss."""
