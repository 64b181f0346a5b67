"""Dense kernels for weighted (H-) inner products, norms, and factorizations.

Everything in the package measures vectors and operators in norms induced by
symmetric positive definite (SPD) matrices.  A ``WeightedSpace`` wraps one SPD
matrix H together with its Cholesky factor L (H = L L^T) and exposes the two
coordinate maps that make weighted computations cheap and symmetric to machine
precision::

    tf(v)  = L^T v      maps the space to Euclidean coordinates,
    itf(w) = L^{-T} w   maps back,

so that  <u, v>_H = tf(u) . tf(v)  and  ||v||_H = ||tf(v)||_2.

Weighted operator norm convention
---------------------------------
For a matrix M mapping a space with norm matrix H1 into a space with norm
matrix H2,

    op_norm(M, from_space, to_space) = || L2^T M L1^{-T} ||_2
                                     = max_v ||M v||_{H2} / ||v||_{H1},

written ||M||_{H1,H2}.  The four subscript combinations that appear in
weighted-norm analyses are all obtained by passing the right spaces; with
``S = factor_spd(H)`` and ``Si = S.inverse()``:

    =====================  =============================
    quantity               call
    =====================  =============================
    ||M||_{H1,H2}          op_norm(M, S1,  S2)
    ||M||_{H1,H2^{-1}}     op_norm(M, S1,  S2i)
    ||M||_{H1^{-1},H2}     op_norm(M, S1i, S2)
    ||M||_{H1^{-1},H2^-1}  op_norm(M, S1i, S2i)
    =====================  =============================

``inv_norm(M, from_space, to_space)`` takes the same two spaces describing M
itself and returns the norm of the *inverse* map, ||M^{-1}||_{H2,H1}, computed
as 1 / sigma_min(L2^T M L1^{-T}).  In particular ||A^{-1}||_H is
``inv_norm(A, S, S)``.

Norm values are estimated by power iteration on the Gram matrix of the
transformed operator (deterministic all-ones start, relative-change stopping
test); non-convergence is reported through ``NormEstimate.converged`` rather
than raised.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .exceptions import (
    DimensionMismatchError,
    NotPositiveDefiniteError,
    NotSymmetricError,
    SingularMatrixError,
)

__all__ = [
    "NormEstimate",
    "WeightedSpace",
    "factor_spd",
    "weighted_inner",
    "weighted_transform",
    "op_norm",
    "inv_norm",
    "min_singular_value",
    "lu_solve",
    "as_matrix",
    "as_vector",
]

DEFAULT_TOL = 1e-10
DEFAULT_MAXIT = 10000
SYMMETRY_TOL = 1e-12


def as_matrix(M, name="matrix"):
    """Validate and return a 2-d float/complex array with finite entries."""
    A = np.asarray(M)
    if A.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-dimensional, got shape {A.shape}")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionMismatchError(f"{name} must have at least one row and column")
    if not np.issubdtype(A.dtype, np.complexfloating):
        A = A.astype(float, copy=False)
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def as_vector(v, dim=None, name="vector"):
    x = np.asarray(v)
    if x.ndim != 1:
        raise DimensionMismatchError(f"{name} must be 1-dimensional, got shape {x.shape}")
    if dim is not None and x.shape[0] != dim:
        raise DimensionMismatchError(f"{name} has length {x.shape[0]}, expected {dim}")
    if not np.issubdtype(x.dtype, np.complexfloating):
        x = x.astype(float, copy=False)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite entries")
    return x


@dataclass
class NormEstimate:
    """Result of an iterative norm computation.

    value      -- the norm estimate (>= 0)
    iterations -- power-iteration steps taken
    converged  -- relative change reached tolerance
    residual   -- relative change at termination
    """

    value: float
    iterations: int
    converged: bool
    residual: float


class _Block:
    """One diagonal block of a WeightedSpace: identity, scaled identity, or dense."""

    __slots__ = ("size", "scale", "L")

    def __init__(self, size, scale=None, L=None):
        self.size = size
        self.scale = scale  # L = scale * I when set
        self.L = L          # dense lower-triangular factor otherwise

    @property
    def is_identity(self):
        return self.L is None and (self.scale is None or self.scale == 1.0)


class WeightedSpace:
    """An SPD norm matrix H with its Cholesky factorization H = L L^T.

    Internally block-diagonal so that large solver-side spaces (for example
    blkdiag(H1, h^2 I)) never materialize a dense (n+m)^2 matrix.  ``H`` and
    ``L`` assemble dense arrays on demand; certificate-scale callers only.
    """

    def __init__(self, blocks):
        self._blocks = list(blocks)
        self.dim = sum(b.size for b in self._blocks)
        self._inverse = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def euclidean(cls, dim):
        """The Euclidean space (H = I)."""
        return cls([_Block(dim)])

    @classmethod
    def scaled_identity(cls, dim, scale):
        """Space with H = scale^2 * I (i.e. L = scale * I)."""
        if scale <= 0:
            raise NotPositiveDefiniteError(0, "scale must be positive")
        return cls([_Block(dim, scale=float(scale))])

    @classmethod
    def from_cholesky(cls, H, L):
        b = _Block(H.shape[0], L=np.asarray(L))
        return cls([b])

    @classmethod
    def block_diag(cls, *spaces):
        blocks = []
        for s in spaces:
            blocks.extend(s._blocks)
        return cls(blocks)

    # -- properties ---------------------------------------------------------

    @property
    def is_identity(self):
        return all(b.is_identity for b in self._blocks)

    @property
    def H(self):
        """Dense norm matrix (assembled on demand)."""
        out = np.zeros((self.dim, self.dim))
        k = 0
        for b in self._blocks:
            s = slice(k, k + b.size)
            if b.L is not None:
                out[s, s] = b.L @ b.L.T
            else:
                np.fill_diagonal(out[s, s], 1.0 if b.scale is None else b.scale**2)
            k += b.size
        return out

    @property
    def L(self):
        """Dense lower-triangular factor (assembled on demand)."""
        out = np.zeros((self.dim, self.dim))
        k = 0
        for b in self._blocks:
            s = slice(k, k + b.size)
            if b.L is not None:
                out[s, s] = b.L
            else:
                np.fill_diagonal(out[s, s], 1.0 if b.scale is None else b.scale)
            k += b.size
        return out

    # -- coordinate maps ----------------------------------------------------

    def tf(self, v):
        """L^T v.  Accepts a vector or a matrix (applied columnwise)."""
        if self.is_identity:
            return v
        out = np.array(v, dtype=v.dtype if np.iscomplexobj(v) else float, copy=True)
        k = 0
        for b in self._blocks:
            s = slice(k, k + b.size)
            if b.L is not None:
                out[s] = b.L.T @ out[s]
            elif b.scale is not None:
                out[s] *= b.scale
            k += b.size
        return out

    def itf(self, w):
        """L^{-T} w.  Accepts a vector or a matrix (applied columnwise)."""
        if self.is_identity:
            return w
        out = np.array(w, dtype=w.dtype if np.iscomplexobj(w) else float, copy=True)
        k = 0
        for b in self._blocks:
            s = slice(k, k + b.size)
            if b.L is not None:
                out[s] = sla.solve_triangular(b.L, out[s], lower=True, trans="T", check_finite=False)
            elif b.scale is not None:
                out[s] /= b.scale
            k += b.size
        return out

    def itf_right(self, M):
        """M L^{-T} for a matrix M with self.dim columns."""
        if self.is_identity:
            return M
        out = np.array(M, dtype=M.dtype if np.iscomplexobj(M) else float, copy=True)
        k = 0
        for b in self._blocks:
            s = slice(k, k + b.size)
            if b.L is not None:
                # out[:, s] <- out[:, s] L_b^{-T}, via (L_b^{-1} X^T)^T
                out[:, s] = sla.solve_triangular(
                    b.L, out[:, s].T, lower=True, trans="N", check_finite=False).T
            elif b.scale is not None:
                out[:, s] /= b.scale
            k += b.size
        return out

    def inner(self, u, v):
        """<u, v>_H evaluated as tf(u) . tf(v)."""
        tu, tv = self.tf(u), self.tf(v)
        return np.vdot(tu, tv) if np.iscomplexobj(tu) or np.iscomplexobj(tv) else float(tu @ tv)

    def norm(self, v):
        """||v||_H = ||tf(v)||_2."""
        return float(np.linalg.norm(self.tf(v)))

    def inverse(self):
        """The space whose norm matrix is H^{-1} (cached).

        Each dense block's inverse is formed explicitly and re-factored, so
        the returned space carries a proper lower-triangular Cholesky factor.
        """
        if self._inverse is None:
            blocks = []
            for b in self._blocks:
                if b.L is None:
                    scale = None if b.scale is None else 1.0 / b.scale
                    blocks.append(_Block(b.size, scale=scale))
                else:
                    Hinv = sla.cho_solve((b.L, True), np.eye(b.size), check_finite=False)
                    Hinv = (Hinv + Hinv.T) / 2.0
                    blocks.append(factor_spd(Hinv)._blocks[0])
            self._inverse = WeightedSpace(blocks)
            self._inverse._inverse = self
        return self._inverse


def factor_spd(H, sym_tol=SYMMETRY_TOL):
    """Factor an SPD matrix H = L L^T and wrap it as a WeightedSpace.

    Raises NotSymmetricError if ||H - H^T||_F > sym_tol * ||H||_F, and
    NotPositiveDefiniteError (with the pivot index) if a Cholesky pivot is
    non-positive.
    """
    H = as_matrix(H, "H")
    n, m = H.shape
    if n != m:
        raise DimensionMismatchError(f"H must be square, got {H.shape}")
    scale = np.linalg.norm(H, "fro")
    if scale > 0 and np.linalg.norm(H - H.T, "fro") > sym_tol * scale:
        raise NotSymmetricError("H is not symmetric within tolerance")
    c, info = lapack.dpotrf(H, lower=1)
    if info > 0:
        raise NotPositiveDefiniteError(info - 1)
    if info < 0:
        raise ValueError(f"illegal value in argument {-info} of Cholesky")
    return WeightedSpace.from_cholesky(H, np.tril(c))


def weighted_inner(u, v, space):
    """u^T H v, evaluated through the stored factor as (L^T u).(L^T v)."""
    u = as_vector(u, space.dim, "u")
    v = as_vector(v, space.dim, "v")
    return space.inner(u, v)


def weighted_transform(M, from_space, to_space):
    """The transformed operator C = L_to^T M L_from^{-T}.

    ||C||_2 = ||M||_{H_from, H_to}; singular values of C are the weighted
    singular values of M between the two spaces.
    """
    M = as_matrix(M, "M")
    if M.shape[1] != from_space.dim:
        raise DimensionMismatchError(
            f"M has {M.shape[1]} columns but from-space dimension is {from_space.dim}")
    if M.shape[0] != to_space.dim:
        raise DimensionMismatchError(
            f"M has {M.shape[0]} rows but to-space dimension is {to_space.dim}")
    return to_space.tf(from_space.itf_right(M))


def _power_iteration(matvec, rmatvec, n, tol, maxit, complex_ok=False):
    """Largest eigenvalue of the Gram operator z -> rmatvec(matvec(z)).

    Deterministic all-ones start; falls back to a seeded start if the first
    iterate collapses.  Returns (eigenvalue, iterations, converged, residual).
    """
    dtype = complex if complex_ok else float
    z = np.ones(n, dtype=dtype) / np.sqrt(n)
    lam_prev = None
    lam = 0.0
    res = np.inf
    for it in range(1, maxit + 1):
        u = matvec(z)
        lam = float(np.real(np.vdot(u, u)))  # z normalized, so this is the Rayleigh quotient
        z_new = rmatvec(u)
        nz = np.linalg.norm(z_new)
        if nz == 0.0:
            if it == 1:
                rng = np.random.default_rng(12345)
                z = rng.standard_normal(n).astype(dtype)
                z /= np.linalg.norm(z)
                continue
            return lam, it, True, 0.0
        z = z_new / nz
        if lam_prev is not None:
            res = abs(lam - lam_prev) / max(lam, np.finfo(float).tiny)
            if res <= tol:
                return lam, it, True, res
        lam_prev = lam
    return lam, maxit, False, res


def op_norm(M, from_space, to_space, tol=DEFAULT_TOL, maxit=DEFAULT_MAXIT):
    """Weighted operator norm ||M||_{H_from, H_to} (largest weighted singular value).

    Power iteration on the Gram matrix of C = L_to^T M L_from^{-T}, stopping
    when the relative change of the eigenvalue estimate is <= tol.  A run
    that exhausts maxit returns its best estimate with converged=False.
    """
    C = weighted_transform(M, from_space, to_space)
    cc = np.iscomplexobj(C)
    Ct = C.conj().T if cc else C.T
    lam, it, conv, res = _power_iteration(
        lambda z: C @ z, lambda u: Ct @ u, C.shape[1], tol, maxit, complex_ok=cc)
    return NormEstimate(float(np.sqrt(max(lam, 0.0))), it, conv, res)


def _lu_factor_checked(C):
    """LU with partial pivoting; raises SingularMatrixError on a negligible pivot."""
    lu, piv = sla.lu_factor(C, check_finite=False)
    diag = np.abs(np.diag(lu))
    scale = np.abs(C).max()
    bad = np.where(diag <= 1e-14 * max(scale, np.finfo(float).tiny))[0]
    if bad.size:
        raise SingularMatrixError(f"zero pivot at index {bad[0]} (|u_ii| <= 1e-14 * scale)")
    return lu, piv


def inv_norm(M, from_space, to_space, tol=DEFAULT_TOL, maxit=DEFAULT_MAXIT):
    """||M^{-1}||_{H_to, H_from} = 1 / sigma_min(L_to^T M L_from^{-T}).

    The spaces describe M itself, exactly as in op_norm; the returned value
    is the weighted norm of the inverse map.  Inverse power iteration on the
    Gram matrix, using an LU factorization of the transformed operator.
    """
    M = as_matrix(M, "M")
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatchError("inv_norm requires a square matrix")
    C = weighted_transform(M, from_space, to_space)
    lu, piv = _lu_factor_checked(C)
    trans_pair = (2, 0) if np.iscomplexobj(C) else (1, 0)

    def matvec(z):  # C^{-T} z (or C^{-*} z)
        return sla.lu_solve((lu, piv), z, trans=trans_pair[0], check_finite=False)

    def rmatvec(u):  # C^{-1} u
        return sla.lu_solve((lu, piv), u, trans=trans_pair[1], check_finite=False)

    lam, it, conv, res = _power_iteration(
        matvec, rmatvec, C.shape[0], tol, maxit, complex_ok=np.iscomplexobj(C))
    return NormEstimate(float(np.sqrt(max(lam, 0.0))), it, conv, res)


def min_singular_value(C, tol=DEFAULT_TOL, maxit=DEFAULT_MAXIT):
    """Smallest singular value of a (possibly rectangular, m <= n) matrix.

    Inverse power iteration on the small-side Gram matrix via its Cholesky
    factorization.  Returns a NormEstimate whose value is sigma_min; a value
    of 0.0 with converged=True signals numerical rank deficiency.
    """
    C = as_matrix(C, "C")
    if C.shape[0] < C.shape[1]:
        C = C.T
    G = C.T @ C
    G = (G + G.T) / 2.0
    try:
        cf = sla.cho_factor(G, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return NormEstimate(0.0, 0, True, 0.0)

    def solve(z):
        return sla.cho_solve(cf, z, check_finite=False)

    n = G.shape[0]
    z = np.ones(n) / np.sqrt(n)
    mu_prev = None
    mu = 0.0
    res = np.inf
    for it in range(1, maxit + 1):
        y = solve(z)
        mu = float(z @ y)  # Rayleigh quotient of G^{-1}
        ny = np.linalg.norm(y)
        if ny == 0.0:
            break
        z = y / ny
        if mu_prev is not None:
            res = abs(mu - mu_prev) / max(abs(mu), np.finfo(float).tiny)
            if res <= tol:
                return NormEstimate(1.0 / np.sqrt(mu), it, True, res)
        mu_prev = mu
    return NormEstimate(1.0 / np.sqrt(mu) if mu > 0 else 0.0, maxit, False, res)


def lu_solve(M, rhs):
    """Solve M x = rhs by LU with partial pivoting.

    rhs may be a vector or a matrix of right-hand sides.  Raises
    SingularMatrixError when a pivot is negligible relative to max|M|.
    """
    M = as_matrix(M, "M")
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatchError("lu_solve requires a square matrix")
    b = np.asarray(rhs, dtype=float if not np.iscomplexobj(rhs) else complex)
    if b.shape[0] != M.shape[0]:
        raise DimensionMismatchError(
            f"rhs has leading dimension {b.shape[0]}, expected {M.shape[0]}")
    lu, piv = _lu_factor_checked(M)
    return sla.lu_solve((lu, piv), b, check_finite=False)
