"""Saddle-point systems, block preconditioners, and assumption checks.

A saddle-point system couples a positive-real leading block F with a
full-row-rank constraint block B:

    K = [ F   B^T ]        S = B F^{-1} B^T  (Schur complement).
        [ B   0   ]

``assemble`` splits F into its symmetric part H1 = (F + F^T)/2 (SPD exactly
when F is positive real) and skew part N = (F - F^T)/2, and stores F as the
recomputed sum H1 + N so the split identity holds bitwise.

Block preconditioners (all built from the exact blocks; the (1,1) solve is an
LU of F, or a fixed linear Gauss-Seidel approximation for "inexact-upper"):

    diag:   [F 0; 0 H2]     upper: [F B^T; 0 H2]     lower: [F 0; B H2]

``verify_assumptions`` measures the constants the convergence analysis needs
(eta, C1, C2) and checks the three inequalities they imply for ||F||,
||F^{-1}|| and ||S^{-1}|| in the weighted norms.  These are theorems for
positive-real systems, so a failed check indicates a bug, not a bad problem.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from . import mmio
from .exceptions import (
    DimensionMismatchError,
    H2NotSPDError,
    InvalidParamsError,
    NotPositiveDefiniteError,
    NotPositiveRealError,
    NotSymmetricError,
    RankDeficientBError,
    SingularMatrixError,
    ZeroDiagonalError,
)
from .linalg import (
    WeightedSpace,
    as_matrix,
    as_vector,
    factor_spd,
    inv_norm,
    lu_solve,
    min_singular_value,
    op_norm,
    weighted_transform,
)

__all__ = [
    "SaddlePointSystem",
    "BlockPreconditioner",
    "AssumptionReport",
    "InexactLeadingBlock",
    "assemble",
    "schur",
    "make_preconditioner",
    "apply_inverse",
    "make_inexact_p1",
    "verify_assumptions",
    "preconditioned_matrix",
    "save_system",
    "load_system",
]

POSITIVE_REAL_SAMPLES = 200
FULL_CHECK_DIM = 2500


@dataclass
class SaddlePointSystem:
    """Blocks of one saddle-point system plus provenance metadata.

    F = H1 + N holds exactly (F is stored as that sum).  meta records the
    generator name and its parameters (nu, grid, ...).
    """

    F: np.ndarray
    B: np.ndarray
    H1: np.ndarray
    N: np.ndarray
    H2: np.ndarray
    n: int
    m: int
    meta: dict = field(default_factory=dict)
    _h1_space: WeightedSpace | None = None
    _h2_space: WeightedSpace | None = None
    _h_space: WeightedSpace | None = None
    _lu_f: tuple | None = None

    def lu_f(self):
        """Cached LU factorization of F (shared across preconditioners)."""
        if self._lu_f is None:
            try:
                lu, piv = sla.lu_factor(self.F, check_finite=False)
            except np.linalg.LinAlgError as exc:
                raise SingularMatrixError(f"F block is singular: {exc}") from exc
            diag = np.abs(np.diag(lu))
            if diag.min() <= 1e-14 * max(np.abs(self.F).max(), np.finfo(float).tiny):
                raise SingularMatrixError("F block is singular to working precision")
            self._lu_f = (lu, piv)
        return self._lu_f

    def apply_K(self, v):
        v1, v2 = v[: self.n], v[self.n:]
        return np.concatenate([self.F @ v1 + self.B.T @ v2, self.B @ v1])

    def K(self):
        """Materialize the (n+m) x (n+m) block matrix."""
        K = np.zeros((self.n + self.m, self.n + self.m))
        K[: self.n, : self.n] = self.F
        K[: self.n, self.n:] = self.B.T
        K[self.n:, : self.n] = self.B
        return K

    def h1_space(self):
        if self._h1_space is None:
            self._h1_space = factor_spd(self.H1)
        return self._h1_space

    def h2_space(self):
        if self._h2_space is None:
            scale = self.meta.get("h2_scale")
            if scale is not None:
                self._h2_space = WeightedSpace.scaled_identity(self.m, np.sqrt(scale))
            else:
                try:
                    self._h2_space = factor_spd(self.H2)
                except (NotPositiveDefiniteError, NotSymmetricError) as exc:
                    raise H2NotSPDError(str(exc)) from exc
        return self._h2_space

    def h_space(self):
        """The block-diagonal solve norm H = blkdiag(H1, H2)."""
        if self._h_space is None:
            self._h_space = WeightedSpace.block_diag(self.h1_space(), self.h2_space())
        return self._h_space


def assemble(F, B, H2, meta=None, check="auto"):
    """Build a SaddlePointSystem from its blocks.

    check: "full" verifies positive realness (200 seeded unit vectors plus the
    definitive H1 Cholesky) and full row rank of B (weighted smallest singular
    value); "light" skips the O(n^3)-beyond-Cholesky rank check; "auto" picks
    "full" for n + m <= 2500.  Generators at larger sizes rely on construction
    plus the full checks exercised at small sizes by the test suite.
    """
    F = as_matrix(F, "F")
    B = as_matrix(B, "B")
    H2 = as_matrix(H2, "H2")
    n = F.shape[0]
    if F.shape[1] != n:
        raise DimensionMismatchError("F must be square")
    m = B.shape[0]
    if B.shape[1] != n:
        raise DimensionMismatchError(f"B must have {n} columns, got {B.shape[1]}")
    if H2.shape != (m, m):
        raise DimensionMismatchError(f"H2 must be {m}x{m}, got {H2.shape}")

    H1 = (F + F.T) / 2.0
    N = (F - F.T) / 2.0
    F = H1 + N  # stored sum: the split identity holds bitwise on re-evaluation

    sys = SaddlePointSystem(F=F, B=B, H1=H1, N=N, H2=H2, n=n, m=m, meta=dict(meta or {}))

    if check not in ("full", "light", "auto"):
        raise ValueError("check must be 'full', 'light' or 'auto'")
    if check == "auto":
        check = "full" if n + m <= FULL_CHECK_DIM else "light"

    # positive-real spot check: u^T F u > 0 on seeded unit vectors
    rng = np.random.default_rng(20240517)
    nsamp = POSITIVE_REAL_SAMPLES
    U = rng.standard_normal((n, nsamp))
    U /= np.linalg.norm(U, axis=0)
    quad = np.einsum("ij,ij->j", U, F @ U)
    if quad.min() <= 0:
        raise NotPositiveRealError(
            f"sampled Rayleigh quotient u^T F u = {quad.min():.3e} <= 0")
    # definitive check: positive real <=> H1 SPD
    try:
        sys.h1_space()
    except NotPositiveDefiniteError as exc:
        raise NotPositiveRealError(f"symmetric part of F is not SPD: {exc}") from exc
    sys.h2_space()  # raises H2NotSPDError if not factorizable

    if check == "full":
        C = weighted_transform(B.T, sys.h2_space(), sys.h1_space().inverse())
        smin = min_singular_value(C).value
        smax = op_norm(B.T, sys.h2_space(), sys.h1_space().inverse()).value
        if smin <= 1e-10 * max(smax, np.finfo(float).tiny):
            raise RankDeficientBError(
                f"weighted sigma_min(B) = {smin:.3e} <= 1e-10 * scale")
    return sys


def schur(sys):
    """Dense Schur complement S = B F^{-1} B^T."""
    X = lu_solve(sys.F, sys.B.T)
    return sys.B @ X


class _H2Solver:
    """Solve H2 x = b, with a scalar fast path for H2 = s*I."""

    def __init__(self, H2, meta):
        scale = meta.get("h2_scale")
        if scale is not None:
            self.scale = float(scale)
            self.cf = None
        else:
            d = np.diag(H2)
            if np.count_nonzero(H2 - np.diag(d)) == 0 and d.size and np.all(d == d[0]) and d[0] > 0:
                self.scale = float(d[0])
                self.cf = None
            else:
                try:
                    self.cf = sla.cho_factor(H2, lower=True, check_finite=False)
                except np.linalg.LinAlgError as exc:
                    raise H2NotSPDError(str(exc)) from exc
                self.scale = None

    def solve(self, b):
        if self.cf is None:
            return b / self.scale
        return sla.cho_solve(self.cf, b, check_finite=False)


@dataclass
class InexactLeadingBlock:
    """Fixed linear action P1^{-1} defined by k symmetric Gauss-Seidel sweeps on F.

    p1_inv is the explicit matrix of the action; deviation_h1 and finv_p1_h1
    report ||P1^{-1} F - I||_{H1} and ||F^{-1} P1||_{H1} so the inexactness
    assumption can be checked rather than assumed.
    """

    p1_inv: np.ndarray
    sweeps: int
    deviation_h1: float
    finv_p1_h1: float


def make_inexact_p1(sys, sweeps):
    """Build the inexact (1,1)-block action from symmetric Gauss-Seidel sweeps.

    One sweep applies x <- x + P_sgs^{-1}(b - F x) with
    P_sgs = (D + Lo) D^{-1} (D + Up); k sweeps from x = 0 define the linear
    map P1^{-1} = (I - E^k) F^{-1} with E = I - P_sgs^{-1} F.
    """
    if sweeps < 1:
        raise InvalidParamsError("sweeps must be >= 1")
    F = sys.F
    n = sys.n
    d = np.diag(F)
    if np.any(d == 0.0):
        idx = int(np.where(d == 0.0)[0][0])
        raise ZeroDiagonalError(f"F has a zero diagonal entry at index {idx}")
    lo = np.tril(F)          # D + Lo
    up = np.triu(F)          # D + Up
    # P_sgs^{-1} F = (D+Up)^{-1} D (D+Lo)^{-1} F
    T = sla.solve_triangular(lo, F, lower=True, check_finite=False)
    T = d[:, None] * T
    T = sla.solve_triangular(up, T, lower=False, check_finite=False)
    E = np.eye(n) - T
    Ek = np.linalg.matrix_power(E, sweeps)
    p1_inv = (np.eye(n) - Ek) @ lu_solve(F, np.eye(n))

    sp1 = sys.h1_space()
    deviation = op_norm(Ek, sp1, sp1).value  # ||P1^{-1} F - I||_{H1} = ||E^k||_{H1}
    finv_p1 = inv_norm(np.eye(n) - Ek, sp1, sp1).value  # ||F^{-1} P1||_{H1}
    return InexactLeadingBlock(p1_inv=p1_inv, sweeps=sweeps,
                               deviation_h1=deviation, finv_p1_h1=finv_p1)


class BlockPreconditioner:
    """One of the block preconditioners with its application side.

    variant: "diag" | "upper" | "lower" | "inexact-upper"
    side:    "left" | "right"

    The (1,1) solve is an LU factorization of F, except for "inexact-upper"
    where it is the P1^{-1} action; the (2,2) solve is exact H2.
    """

    VARIANTS = ("diag", "upper", "lower", "inexact-upper")

    def __init__(self, sys, variant, side="left", sweeps=4):
        if variant not in self.VARIANTS:
            raise InvalidParamsError(f"unknown preconditioner variant {variant!r}")
        if side not in ("left", "right"):
            raise InvalidParamsError(f"side must be 'left' or 'right', got {side!r}")
        self.variant = variant
        self.side = side
        self.sys = sys
        self.n, self.m = sys.n, sys.m
        self._h2 = _H2Solver(sys.H2, sys.meta)
        self.inexact = None
        if variant == "inexact-upper":
            self.inexact = make_inexact_p1(sys, sweeps)
            self._lu = None
        else:
            self._lu = sys.lu_f()

    def _solve_f(self, b):
        if self.inexact is not None:
            return self.inexact.p1_inv @ b
        return sla.lu_solve(self._lu, b, check_finite=False)

    def apply_inverse(self, v):
        """x = M^{-1} v; v may be a vector or a matrix of columns."""
        n = self.n
        v1, v2 = v[:n], v[n:]
        if self.variant == "diag":
            return np.concatenate([self._solve_f(v1), self._h2.solve(v2)])
        if self.variant in ("upper", "inexact-upper"):
            x2 = self._h2.solve(v2)
            x1 = self._solve_f(v1 - self.sys.B.T @ x2)
            return np.concatenate([x1, x2])
        # lower
        x1 = self._solve_f(v1)
        x2 = self._h2.solve(v2 - self.sys.B @ x1)
        return np.concatenate([x1, x2])

    def matrix(self):
        """Materialize M as a dense matrix."""
        n, m = self.n, self.m
        M = np.zeros((n + m, n + m))
        if self.inexact is not None:
            M[:n, :n] = lu_solve(self.inexact.p1_inv, np.eye(n))  # P1
        else:
            M[:n, :n] = self.sys.F
        M[n:, n:] = self.sys.H2
        if self.variant in ("upper", "inexact-upper"):
            M[:n, n:] = self.sys.B.T
        elif self.variant == "lower":
            M[n:, :n] = self.sys.B
        return M


def make_preconditioner(sys, variant, side="left", sweeps=4):
    return BlockPreconditioner(sys, variant, side=side, sweeps=sweeps)


def apply_inverse(M, sys, v):
    """Module-level form of BlockPreconditioner.apply_inverse."""
    v = as_vector(v, sys.n + sys.m, "v")
    return M.apply_inverse(v)


def preconditioned_matrix(sys, M):
    """Materialize the preconditioned operator: M^{-1} K (left) or K M^{-1} (right)."""
    K = sys.K()
    if M.side == "left":
        return M.apply_inverse(K)
    return K @ M.apply_inverse(np.eye(sys.n + sys.m))


@dataclass
class AssumptionReport:
    """Measured constants and the lemma inequalities they must satisfy.

    eta  = ||N||_{H1,H1^{-1}}        C1 = ||B||_{H1,H2^{-1}}
    C2   = min_x ||B^T x||_{H1^{-1}} / ||x||_{H2}
    f_norm, finv_norm, sinv_norm are the measured weighted norms of F, F^{-1}
    and S^{-1}; sinv_bound = (1+eta)^2 / C2^2.  lemma_checks holds
    (name, lhs, rhs, passed) with passed <=> lhs <= rhs * (1 + 1e-8).
    """

    eta: float
    C1: float
    C2: float
    f_norm: float
    finv_norm: float
    sinv_norm: float
    sinv_bound: float
    lemma_checks: list

    @property
    def all_pass(self):
        return all(ok for (_, _, _, ok) in self.lemma_checks)


def verify_assumptions(sys, tol=1e-10, maxit=10000):
    """Measure eta, C1, C2 and check the weighted-norm inequalities.

    The three checks (||F|| <= 1+eta, ||F^{-1}|| <= 1, ||S^{-1}|| <=
    (1+eta)^2/C2^2) are theorems whenever H1 is the symmetric part of a
    positive-real F, so pass=False on any of them indicates a bug.
    """
    sp1 = sys.h1_space()
    sp1i = sp1.inverse()
    sp2 = sys.h2_space()
    sp2i = sp2.inverse()

    eta = op_norm(sys.N, sp1, sp1i, tol, maxit).value
    C1 = op_norm(sys.B, sp1, sp2i, tol, maxit).value
    Ct = weighted_transform(sys.B.T, sp2, sp1i)
    C2 = min_singular_value(Ct, tol, maxit).value
    if C2 <= 0:
        raise RankDeficientBError("transformed B is numerically rank deficient")

    f_norm = op_norm(sys.F, sp1, sp1i, tol, maxit).value
    finv_norm = inv_norm(sys.F, sp1, sp1i, tol, maxit).value
    S = schur(sys)
    sinv_norm = inv_norm(S, sp2, sp2i, tol, maxit).value
    sinv_bound = (1.0 + eta) ** 2 / C2**2

    slack = 1.0 + 1e-8
    checks = [
        ("f_norm_le_one_plus_eta", f_norm, 1.0 + eta, f_norm <= (1.0 + eta) * slack),
        ("finv_norm_le_one", finv_norm, 1.0, finv_norm <= slack),
        ("sinv_norm_le_infsup_bound", sinv_norm, sinv_bound, sinv_norm <= sinv_bound * slack),
    ]
    return AssumptionReport(eta=eta, C1=C1, C2=C2, f_norm=f_norm, finv_norm=finv_norm,
                            sinv_norm=sinv_norm, sinv_bound=sinv_bound, lemma_checks=checks)


# -- directory serialization -------------------------------------------------

_SYSTEM_FILES = {"F": "F.mtx", "B": "B.mtx", "H1": "H1.mtx", "H2": "H2.mtx"}


def save_system(sys, directory):
    """Write F.mtx, B.mtx, H1.mtx, H2.mtx plus a JSON metadata sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for attr, fname in _SYSTEM_FILES.items():
        mmio.write_matrix(directory / fname, getattr(sys, attr))
    sidecar = {
        "schema_version": 1,
        "n": sys.n,
        "m": sys.m,
        "generator": sys.meta.get("generator"),
        "nu": sys.meta.get("nu"),
        "grid": sys.meta.get("grid"),
        "meta": {k: v for k, v in sys.meta.items() if _jsonable(v)},
    }
    with open(directory / "system.json", "w", encoding="utf-8") as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)
        f.write("\n")


def _jsonable(v):
    return isinstance(v, (str, int, float, bool, type(None)))


def load_system(directory, check="auto"):
    """Load a system directory written by save_system.

    The stored H1 must agree with the recomputed symmetric part of F to
    1e-12 relative (Frobenius).
    """
    directory = Path(directory)
    mats = {attr: mmio.read_matrix(directory / fname) for attr, fname in _SYSTEM_FILES.items()}
    with open(directory / "system.json", encoding="utf-8") as f:
        sidecar = json.load(f)
    meta = dict(sidecar.get("meta") or {})
    for key in ("generator", "nu", "grid"):
        if sidecar.get(key) is not None:
            meta.setdefault(key, sidecar[key])
    sys = assemble(mats["F"], mats["B"], mats["H2"], meta=meta, check=check)
    scale = max(np.linalg.norm(mats["H1"], "fro"), np.finfo(float).tiny)
    if np.linalg.norm(sys.H1 - mats["H1"], "fro") > 1e-12 * scale:
        raise InvalidParamsError("stored H1 disagrees with the symmetric part of F")
    return sys
