"""Exception types raised across the package.

Only genuine contract violations raise.  Iterative routines that merely fail
to converge report ``converged=False`` on their result object instead of
raising (see ``linalg.NormEstimate`` and ``krylov.GmresTrace``).
"""


class FovkError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(FovkError):
    """Operands have incompatible shapes."""


class NotSymmetricError(FovkError):
    """Matrix expected to be symmetric is not (beyond tolerance)."""


class NotPositiveDefiniteError(FovkError):
    """Symmetric matrix has a non-positive pivot.

    ``index`` is the 0-based index of the offending Cholesky pivot.
    """

    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"matrix is not positive definite (pivot {index} <= 0)")


class SingularMatrixError(FovkError):
    """Matrix is singular to working precision."""


class NotPositiveRealError(FovkError):
    """Sampled Rayleigh quotient of the leading block is non-positive."""


class RankDeficientBError(FovkError):
    """Constraint block B does not have full row rank."""


class H2NotSPDError(FovkError):
    """Supplied H2 norm matrix is not symmetric positive definite."""


class ZeroDiagonalError(FovkError):
    """Gauss-Seidel sweep requested on a matrix with a zero diagonal entry."""


class WindNotDivergenceFreeError(FovkError):
    """Convection wind violates the discrete divergence-free requirement."""


class EigFailureError(FovkError):
    """Eigenvalue solver did not converge."""


class DimensionGuardError(FovkError):
    """Operator too large to materialize for dense certificate work."""


class DegenerateRegionError(FovkError):
    """Region sample set is unusable (too few samples, or contains 0)."""


class NearDefectiveError(FovkError):
    """Eigenvector matrix is numerically defective (condition > 1e12)."""


class InvalidParamsError(FovkError):
    """Generator parameters are out of their documented range."""


class MatrixMarketFormatError(FovkError):
    """File does not conform to the Matrix Market format."""
