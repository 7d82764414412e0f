"""Exception types shared across the toolkit.

File-system problems raise the builtin OSError; everything else derives
from EmsError so callers can catch toolkit failures with one handler.
"""


class EmsError(Exception):
    """Base class for all toolkit errors."""


class ZeroVector(EmsError):
    """Vector has (numerically) zero energy; entropy is undefined."""


class ZeroColumn(EmsError):
    """A matrix column has (numerically) zero norm."""


class ZeroSignal(EmsError):
    """Reference signal has zero energy; SRER is undefined."""


class ZeroTrainingColumn(EmsError):
    """A training-set column is the zero vector."""

    def __init__(self, index):
        self.index = index
        super().__init__("training column %d has zero norm" % index)


class DimensionMismatch(EmsError):
    """Operand shapes are incompatible."""


class InvalidShape(EmsError):
    """Matrix dimensions violate a constructor precondition (e.g. M >= N)."""


class InvalidSize(EmsError):
    """Scalar size parameter out of range."""


class InvalidSparsity(EmsError):
    """Sparsity level k outside [1, n] or incompatible with M."""


class TooLarge(EmsError):
    """Problem size exceeds the guard for a combinatorial routine."""


class NotSquare(EmsError):
    """A square matrix was required."""


class NotOrthonormal(EmsError):
    """Matrix fails the orthonormality tolerance."""


class NearSingularCoordinate(EmsError):
    """An entry is too close to zero for the entropy gradient."""


class SvdFailure(EmsError):
    """SVD did not converge or the factor matrix is rank-deficient."""


class SingularSubproblem(EmsError):
    """Least-squares subproblem on the active support is rank-deficient."""


class RankDeficient(EmsError):
    """Matrix does not have full row rank."""


class UnsupportedFormat(EmsError):
    """File is not a supported PGM variant."""


class BadHeader(EmsError):
    """PGM header is malformed or the file is truncated."""


class NotDivisible(EmsError):
    """Image dimensions are not divisible by the block size."""


class ParseError(EmsError):
    """Matrix text file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
