"""Full (unrestarted) GMRES minimizing the residual in a weighted norm.

The Arnoldi process runs with the <.,.>_H inner product.  Inner products are
never evaluated by forming H v: each basis vector v is kept together with its
transformed copy L^T v, so that <u, v>_H = (L^T u).(L^T v) holds to machine
precision and the Arnoldi recurrence stays well-posed (see ``linalg``).

Orthogonalization is modified Gram-Schmidt with one unconditional
reorthogonalization pass; if the second-pass correction is still larger than
1e-6 relative to the vector, further full passes are applied.

Convergence is declared on the relative weighted residual ||r_k||/||r_0||
tracked by the Givens recurrence.  A happy breakdown (the Krylov space became
invariant) is treated as convergence; running out of iterations returns the
best iterate with ``converged=False``.  Neither raises.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionMismatchError
from .linalg import WeightedSpace, as_vector

__all__ = ["LinearOperator", "GmresTrace", "gmres", "solve_preconditioned"]

REORTH_THRESHOLD = 1e-6
BREAKDOWN_TOL = 1e-13
DEFAULT_TOL = 1e-5


class LinearOperator:
    """A square linear map given by its dimension and an apply callable."""

    def __init__(self, dim, apply):
        self.dim = dim
        self._apply = apply

    def __call__(self, v):
        return self._apply(v)

    @classmethod
    def from_matrix(cls, A):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatchError("operator matrix must be square")
        return cls(A.shape[0], lambda v: A @ v)


@dataclass
class GmresTrace:
    """Per-iteration record of a GMRES solve.

    residuals_weighted[j] is ||r_j||_H in the solve norm (j = 0..iterations),
    residuals_euclid[j] the Euclidean norm of the same residuals.  breakdown
    holds the Arnoldi step index at which a happy breakdown occurred, if any.
    For preconditioned solves, unpreconditioned_residual is the Euclidean
    residual of the original (unpreconditioned) system at the final iterate.
    """

    residuals_weighted: list = field(default_factory=list)
    residuals_euclid: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    breakdown: int | None = None
    unpreconditioned_residual: float | None = None
    iterates: list | None = None
    basis: np.ndarray | None = None

    def to_dict(self):
        return {
            "residuals_weighted": [float(r) for r in self.residuals_weighted],
            "residuals_euclid": [float(r) for r in self.residuals_euclid],
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "breakdown": self.breakdown,
            "unpreconditioned_residual": self.unpreconditioned_residual,
        }


def _as_operator(A):
    if isinstance(A, LinearOperator):
        return A
    return LinearOperator.from_matrix(A)


def gmres(A, b, x0=None, space=None, tol=DEFAULT_TOL, maxit=None, keep_iterates=False,
          keep_basis=False):
    """Weighted-norm GMRES for A x = b.

    Parameters
    ----------
    A : LinearOperator or square ndarray
    b : right-hand side
    x0 : initial guess (defaults to zero)
    space : WeightedSpace defining the minimization norm (default Euclidean)
    tol : relative residual tolerance ||r_k||_H / ||r_0||_H
    maxit : maximum Krylov dimension (default: problem dimension)
    keep_iterates : record x_j for every iteration in the trace
    keep_basis : record the Arnoldi basis (columns of trace.basis)

    Returns
    -------
    (x, trace) : final iterate and GmresTrace
    """
    A = _as_operator(A)
    n = A.dim
    b = as_vector(b, n, "b")
    if space is None:
        space = WeightedSpace.euclidean(n)
    if space.dim != n:
        raise DimensionMismatchError(f"space dimension {space.dim} != operator dimension {n}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if maxit is None:
        maxit = n
    maxit = min(maxit, n)
    x0 = np.zeros(n) if x0 is None else as_vector(x0, n, "x0").copy()

    identity = space.is_identity
    r0 = b - A(x0) if np.any(x0) else b.copy()
    r0t = r0 if identity else space.tf(r0)
    beta = float(np.linalg.norm(r0t))

    trace = GmresTrace(residuals_weighted=[beta],
                       residuals_euclid=[float(np.linalg.norm(r0))],
                       iterates=[] if keep_iterates else None)
    if beta == 0.0:
        trace.converged = True
        if keep_iterates:
            trace.iterates.append(x0.copy())
        return x0, trace

    V = [r0 / beta]
    Vt = V if identity else [r0t / beta]
    Hcol = []                      # pre-rotation Hessenberg columns, col j has length j+2
    R = np.zeros((maxit, maxit))   # triangular factor from the Givens recurrence
    g = np.zeros(maxit + 1)
    g[0] = beta
    cs = np.zeros(maxit)
    sn = np.zeros(maxit)

    k = 0
    for j in range(maxit):
        w = A(V[j])
        wt = w if identity else space.tf(w)
        h = np.zeros(j + 2)
        # modified Gram-Schmidt
        for i in range(j + 1):
            hij = float(Vt[i] @ wt)
            h[i] = hij
            w = w - hij * V[i]
            if not identity:
                wt = wt - hij * Vt[i]
            else:
                wt = w
        # one unconditional reorthogonalization pass, more if still losing orthogonality
        for _ in range(3):
            wnorm = float(np.linalg.norm(wt))
            corr = 0.0
            for i in range(j + 1):
                cij = float(Vt[i] @ wt)
                h[i] += cij
                w = w - cij * V[i]
                if not identity:
                    wt = wt - cij * Vt[i]
                else:
                    wt = w
                corr += cij * cij
            if np.sqrt(corr) <= REORTH_THRESHOLD * max(wnorm, 1e-300):
                break
        hh = float(np.linalg.norm(wt))
        h[j + 1] = hh
        Hcol.append(h.copy())

        # Givens recurrence on the new column
        col = h[: j + 2].copy()
        for i in range(j):
            t = cs[i] * col[i] + sn[i] * col[i + 1]
            col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1]
            col[i] = t
        denom = float(np.hypot(col[j], col[j + 1]))
        cs[j], sn[j] = col[j] / denom, col[j + 1] / denom
        R[: j + 1, j] = col[: j + 1]
        R[j, j] = denom
        g[j + 1] = -sn[j] * g[j]
        g[j] = cs[j] * g[j]

        k = j + 1
        trace.residuals_weighted.append(abs(float(g[j + 1])))
        scale = float(np.abs(h).max())
        if hh <= BREAKDOWN_TOL * max(scale, 1e-300):
            # happy breakdown: the exact solution lies in the current space
            trace.breakdown = j
            trace.converged = True
            break
        V.append(w / hh)
        if not identity:
            Vt.append(wt / hh)
        if abs(g[j + 1]) <= tol * beta:
            trace.converged = True
            break

    trace.iterations = k
    y = _solve_upper(R[:k, :k], g[:k])
    Vm = np.array(V).T
    x = x0 + Vm[:, :k] @ y

    _fill_euclid_residuals(trace, Hcol, Vm, beta, k, x0, keep_iterates)
    if keep_iterates:
        trace.iterates = [x0 + Vm[:, :j] @ _solve_ls(Hcol, beta, j) for j in range(1, k + 1)]
        trace.iterates.insert(0, x0.copy())
    if keep_basis:
        trace.basis = Vm
    return x, trace


def _solve_upper(Rk, gk):
    if Rk.shape[0] == 0:
        return np.zeros(0)
    return np.linalg.solve(Rk, gk)


def _hess(Hcol, j):
    """Assemble the (j+1) x j upper-Hessenberg matrix from stored columns."""
    Hm = np.zeros((j + 1, j))
    for c in range(j):
        Hm[: c + 2, c] = Hcol[c]
    return Hm


def _solve_ls(Hcol, beta, j):
    Hm = _hess(Hcol, j)
    rhs = np.zeros(j + 1)
    rhs[0] = beta
    y, *_ = np.linalg.lstsq(Hm, rhs, rcond=None)
    return y


def _fill_euclid_residuals(trace, Hcol, Vm, beta, k, x0, keep_iterates):
    """Euclidean residual norms via the Arnoldi relation r_j = V_{j+1}(beta e1 - Hbar_j y_j)."""
    for j in range(1, k + 1):
        y = _solve_ls(Hcol, beta, j)
        rhs = np.zeros(j + 1)
        rhs[0] = beta
        coeffs = rhs - _hess(Hcol, j) @ y
        # after a happy breakdown the last basis vector was never formed; its
        # coefficient is O(h_{j+1,j}) ~ 0 and may be dropped
        ncols = min(Vm.shape[1], j + 1)
        r = Vm[:, :ncols] @ coeffs[:ncols]
        trace.residuals_euclid.append(float(np.linalg.norm(r)))


def solve_preconditioned(sys, M, rhs, tol=DEFAULT_TOL, maxit=None, norm=None,
                         keep_iterates=False):
    """Run preconditioned GMRES on a saddle-point system.

    Left preconditioning solves M^{-1} K x = M^{-1} rhs in the H-norm of the
    block-diagonal H = blkdiag(H1, H2); right preconditioning solves
    K M^{-1} y = rhs in the H^{-1}-norm and maps back x = M^{-1} y.

    norm overrides the solve norm: "l2", "h", or "hinv" (default is "h" for
    left and "hinv" for right, following the theory).  The Euclidean residual
    of the original system is recorded on the trace.
    """
    n_total = sys.n + sys.m
    rhs = as_vector(rhs, n_total, "rhs")
    if norm is None:
        norm = "h" if M.side == "left" else "hinv"
    if norm == "l2":
        space = WeightedSpace.euclidean(n_total)
    elif norm == "h":
        space = sys.h_space()
    elif norm == "hinv":
        space = sys.h_space().inverse()
    else:
        raise ValueError(f"unknown norm {norm!r}")

    if M.side == "left":
        op = LinearOperator(n_total, lambda v: M.apply_inverse(sys.apply_K(v)))
        b = M.apply_inverse(rhs)
        x, trace = gmres(op, b, space=space, tol=tol, maxit=maxit,
                         keep_iterates=keep_iterates)
    else:
        op = LinearOperator(n_total, lambda v: sys.apply_K(M.apply_inverse(v)))
        y, trace = gmres(op, rhs, space=space, tol=tol, maxit=maxit,
                         keep_iterates=keep_iterates)
        x = M.apply_inverse(y)
        if keep_iterates and trace.iterates is not None:
            trace.iterates = [M.apply_inverse(z) for z in trace.iterates]

    trace.unpreconditioned_residual = float(np.linalg.norm(rhs - sys.apply_K(x)))
    return x, trace
