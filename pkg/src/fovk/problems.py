"""Reproducible problem generators.

Three families:

* ``toeplitz_example`` -- the direct sum of two upper-bidiagonal Toeplitz
  blocks (diagonals -1 and 2, superdiagonals 1/4 and 1.2).  Its field of
  values is essentially two disks, and the reciprocal of ||A^{-1}||_2 sits in
  [0.74, 0.76] for moderate sizes (limit 3/4).

* finite-difference flow analogs on MAC staggered grids: an Oseen (fixed-wind
  Navier-Stokes linearization) system on the unit square and a Stokes-Darcy
  analog on two stacked unit squares.  Both return the 1/nu-scaled form whose
  leading block is H1 + N/nu with H1 the (h^2-scaled) vector Laplacian, so
  the measured skew norm eta scales exactly like 1/nu.

* ``synthetic`` -- systems with prescribed (eta, C1, C2) for stress-testing
  the assumption checks.

Finite differences stand in for the finite elements behind the reference
iteration tables: the qualitative behavior (mesh-independent plateaus, upper
beating diagonal) transfers, exact iteration digits do not.  The MAC
staggering makes the discrete convection exactly skew-symmetric once the
wind is discretely divergence-free, which the streamfunction construction
guarantees to machine precision.

All velocity unknowns are interior (Dirichlet boundaries); the one-dimensional
constant pressure null space is removed by rewriting the constraint in an
orthonormal basis of the mean-zero pressure subspace, after which B has full
row rank and H2 = h^2 I is the pressure norm surrogate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import InvalidParamsError, WindNotDivergenceFreeError
from .precond import SaddlePointSystem, assemble

__all__ = [
    "GridSpec",
    "WindField",
    "default_wind",
    "toeplitz_example",
    "oseen_fd",
    "stokes_darcy_fd",
    "synthetic",
]

DIV_FREE_TOL = 1e-10


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid: cells per side and the mesh width h = 1/cells."""

    cells: int
    domain: str = "unit-square"

    def __post_init__(self):
        if self.cells < 4:
            raise InvalidParamsError("grid must have at least 4 cells per side")
        if self.domain not in ("unit-square", "stacked-squares"):
            raise InvalidParamsError(f"unknown domain {self.domain!r}")
        if abs(self.h * self.cells - 1.0) > 1e-14:
            raise InvalidParamsError("h * cells must equal 1")

    @property
    def h(self):
        return 1.0 / self.cells


@dataclass(frozen=True)
class WindField:
    """Convecting wind sampled on the staggered velocity faces.

    bu[i, j] is the x-component at (i h, (j+1/2) h) for i = 0..c, j = 0..c-1;
    bv[i, j] the y-component at ((i+1/2) h, j h) for i = 0..c-1, j = 0..c.
    divergence_free is set when the discrete cell divergence vanishes
    (<= 1e-10); the streamfunction constructor achieves exactly zero.
    """

    bu: np.ndarray
    bv: np.ndarray
    divergence_free: bool

    @classmethod
    def zero(cls, grid):
        c = grid.cells
        return cls(np.zeros((c + 1, c)), np.zeros((c, c + 1)), True)

    @classmethod
    def from_streamfunction(cls, psi, grid):
        """Discrete curl of vertex samples of psi: exactly divergence-free."""
        c, h = grid.cells, grid.h
        v = np.arange(c + 1) * h
        X, Y = np.meshgrid(v, v, indexing="ij")
        P = np.asarray(psi(X, Y), dtype=float)
        bu = (P[:, 1:] - P[:, :-1]) / h        # d psi / dy at x-faces
        bv = -(P[1:, :] - P[:-1, :]) / h       # -d psi / dx at y-faces
        return cls(bu, bv, True)

    @classmethod
    def from_components(cls, bx, by, grid):
        """Sample analytic components at the face points; the divergence-free
        flag reflects the measured discrete divergence."""
        c, h = grid.cells, grid.h
        xi = np.arange(c + 1) * h
        yc = (np.arange(c) + 0.5) * h
        bu = np.broadcast_to(np.asarray(bx(xi[:, None], yc[None, :]), dtype=float),
                             (c + 1, c)).copy()
        xc = (np.arange(c) + 0.5) * h
        yj = np.arange(c + 1) * h
        bv = np.broadcast_to(np.asarray(by(xc[:, None], yj[None, :]), dtype=float),
                             (c, c + 1)).copy()
        div = (bu[1:, :] - bu[:-1, :]) / h + (bv[:, 1:] - bv[:, :-1]) / h
        return cls(bu, bv, float(np.abs(div).max()) <= DIV_FREE_TOL)

    def max_divergence(self, grid):
        h = grid.h
        div = (self.bu[1:, :] - self.bu[:-1, :]) / h + (self.bv[:, 1:] - self.bv[:, :-1]) / h
        return float(np.abs(div).max())


def default_wind(grid):
    """The recirculating cavity-like wind b = (d psi/dy, -d psi/dx) with
    psi = x^2 (1-x)^2 y^2 (1-y)^2 (zero on the whole boundary)."""
    return WindField.from_streamfunction(
        lambda x, y: x**2 * (1 - x) ** 2 * y**2 * (1 - y) ** 2, grid)


def toeplitz_example(n):
    """The two-block bidiagonal Toeplitz test matrix (2n x 2n)."""
    if n < 2:
        raise InvalidParamsError("n must be >= 2")
    Am = -np.eye(n) + 0.25 * np.eye(n, k=1)
    Ap = 2.0 * np.eye(n) + 1.2 * np.eye(n, k=1)
    A = np.zeros((2 * n, 2 * n))
    A[:n, :n] = Am
    A[n:, n:] = Ap
    return A


# -- MAC staggered-grid building blocks --------------------------------------


def _laplacian_1d(k, left_wall, right_wall):
    """Tridiagonal 1-d Laplacian factor; walls handled by ghost reflection
    (+1 on the end diagonal) when the wall does not carry a grid line."""
    main = np.full(k, 2.0)
    if left_wall:
        main[0] += 1.0
    if right_wall:
        main[-1] += 1.0
    return sp.diags([-np.ones(k - 1), main, -np.ones(k - 1)], [-1, 0, 1], format="csr")


def _u_indexer(c):
    return lambda i, j: (i - 1) * c + j          # i = 1..c-1, j = 0..c-1


def _v_indexer(c, offset):
    return lambda i, j: offset + i * (c - 1) + (j - 1)   # i = 0..c-1, j = 1..c-1


def _velocity_laplacian(c):
    """h^2-scaled vector Laplacian on the interior MAC velocity unknowns."""
    tx = _laplacian_1d(c - 1, False, False)        # u, x-direction: nodes on grid lines
    ty = _laplacian_1d(c, True, True)              # u, y-direction: reflected walls
    Lu = sp.kron(tx, sp.eye(c)) + sp.kron(sp.eye(c - 1), ty)
    Lv = sp.kron(_laplacian_1d(c, True, True), sp.eye(c - 1)) + \
        sp.kron(sp.eye(c), _laplacian_1d(c - 1, False, False))
    return sp.block_diag([Lu, Lv], format="csr")


def _convection(c, h, wind):
    """Flux-form centered convection on the MAC grid, h^2-scaled.

    Control-volume face fluxes are averages of the face-sampled wind; with a
    discretely divergence-free wind every diagonal entry vanishes and the
    off-diagonal pairs are exact negatives, so the matrix is skew-symmetric
    to machine precision.
    """
    bu, bv = wind.bu, wind.bv
    nu_u = (c - 1) * c
    n = nu_u + c * (c - 1)
    iu = _u_indexer(c)
    iv = _v_indexer(c, nu_u)
    rows, cols, vals = [], [], []

    def add(r, cc, v):
        rows.append(r)
        cols.append(cc)
        vals.append(v)

    for i in range(1, c):
        for j in range(c):
            r = iu(i, j)
            we = 0.5 * (bu[i, j] + bu[i + 1, j])
            ww = 0.5 * (bu[i - 1, j] + bu[i, j])
            wn = 0.5 * (bv[i - 1, j + 1] + bv[i, j + 1])
            ws = 0.5 * (bv[i - 1, j] + bv[i, j])
            if i + 1 <= c - 1:
                add(r, iu(i + 1, j), we / 2)
            if i - 1 >= 1:
                add(r, iu(i - 1, j), -ww / 2)
            if j + 1 <= c - 1:
                add(r, iu(i, j + 1), wn / 2)
            if j - 1 >= 0:
                add(r, iu(i, j - 1), -ws / 2)
            add(r, r, (we - ww + wn - ws) / 2)
    for i in range(c):
        for j in range(1, c):
            r = iv(i, j)
            we = 0.5 * (bu[i + 1, j - 1] + bu[i + 1, j])
            ww = 0.5 * (bu[i, j - 1] + bu[i, j])
            wn = 0.5 * (bv[i, j] + bv[i, j + 1])
            ws = 0.5 * (bv[i, j - 1] + bv[i, j])
            if i + 1 <= c - 1:
                add(r, iv(i + 1, j), we / 2)
            if i - 1 >= 0:
                add(r, iv(i - 1, j), -ww / 2)
            if j + 1 <= c - 1:
                add(r, iv(i, j + 1), wn / 2)
            if j - 1 >= 1:
                add(r, iv(i, j - 1), -ws / 2)
            add(r, r, (we - ww + wn - ws) / 2)
    # flux form carries 1/h; the h^2 scaling leaves h * coefficients
    return sp.csr_matrix((np.asarray(vals) * h, (rows, cols)), shape=(n, n))


def _divergence(c, h):
    """h^2-scaled discrete divergence: cell rows, velocity columns (+-h entries)."""
    nu_u = (c - 1) * c
    n = nu_u + c * (c - 1)
    iu = _u_indexer(c)
    iv = _v_indexer(c, nu_u)
    rows, cols, vals = [], [], []
    for ci in range(c):
        for cj in range(c):
            r = ci * c + cj
            if ci + 1 <= c - 1:
                rows.append(r); cols.append(iu(ci + 1, cj)); vals.append(h)
            if ci >= 1:
                rows.append(r); cols.append(iu(ci, cj)); vals.append(-h)
            if cj + 1 <= c - 1:
                rows.append(r); cols.append(iv(ci, cj + 1)); vals.append(h)
            if cj >= 1:
                rows.append(r); cols.append(iv(ci, cj)); vals.append(-h)
    return sp.csr_matrix((vals, (rows, cols)), shape=(c * c, n))


def _drop_pressure_mean(Braw):
    """Rewrite the constraint in an orthonormal basis of the mean-zero
    pressure subspace (Householder complement of the constant vector)."""
    m = Braw.shape[0]
    if m < 2:
        raise InvalidParamsError("pressure space must have at least 2 cells")
    q = np.full(m, 1.0 / np.sqrt(m))
    w = q.copy()
    w[0] -= 1.0
    w /= np.linalg.norm(w)
    PB = Braw - 2.0 * np.outer(w, w @ Braw)   # (I - 2ww^T) B, whose first row spans q^T B
    return PB[1:, :]


def oseen_fd(grid, nu, wind=None):
    """Finite-difference Oseen system on the unit square (scaled form).

    The returned leading block is F = H1 + N/nu with H1 the h^2-scaled MAC
    vector Laplacian and N the flux-form convection for the given wind
    (default: the recirculating cavity-like field).  H2 = h^2 I on the
    reduced (mean-zero) pressure space.
    """
    if nu <= 0:
        raise InvalidParamsError("nu must be positive")
    if grid.domain != "unit-square":
        raise InvalidParamsError("oseen_fd expects a unit-square grid")
    c, h = grid.cells, grid.h
    if wind is None:
        wind = default_wind(grid)
    if not wind.divergence_free or wind.max_divergence(grid) > DIV_FREE_TOL:
        raise WindNotDivergenceFreeError(
            f"discrete wind divergence {wind.max_divergence(grid):.3e} > {DIV_FREE_TOL}")

    H1 = _velocity_laplacian(c)
    N = _convection(c, h, wind)
    skew_defect = float(np.abs(N + N.T).max()) if N.nnz else 0.0
    if skew_defect > 1e-10:
        raise WindNotDivergenceFreeError(
            f"convection skew defect {skew_defect:.3e} (wind not divergence-free?)")
    F = (H1 + N / nu).toarray()
    B = _drop_pressure_mean(_divergence(c, h).toarray())
    m = B.shape[0]
    H2 = h * h * np.eye(m)
    meta = {"generator": "oseen_fd", "nu": float(nu), "grid": c, "h2_scale": h * h}
    return assemble(F, B, H2, meta=meta)


def _darcy_laplacian(c):
    """h^2-scaled cell-centered scalar Laplacian on the Darcy strip:
    Dirichlet top (reflection), homogeneous Neumann on the other sides."""
    tx = _laplacian_1d(c, False, False)
    tx = tx - sp.diags([1.0] + [0.0] * (c - 2) + [1.0])   # Neumann left/right
    ty = _laplacian_1d(c, False, True)                     # Neumann bottom, Dirichlet top
    ty = ty - sp.diags([1.0] + [0.0] * (c - 1))
    return sp.kron(tx, sp.eye(c)) + sp.kron(sp.eye(c), ty)


def stokes_darcy_fd(grid, nu, coupling_scale=1.0):
    """Stokes-Darcy analog on stacked unit squares (scaled form, k = nu).

    Velocity block: blkdiag(Stokes vector Laplacian, Darcy scalar Laplacian)
    plus the skew interface coupling (1/nu) [[0, I12^T], [-I12, 0]], where
    I12 pairs each bottom-row Darcy cell with the Stokes v-unknown across the
    interface with weight h.  The constraint is the Stokes divergence
    extended by zero columns over the Darcy unknowns.
    """
    if nu <= 0:
        raise InvalidParamsError("nu must be positive")
    c, h = grid.cells, grid.h
    A_s = _velocity_laplacian(c)
    n_s = A_s.shape[0]
    A_d = _darcy_laplacian(c)
    n_d = A_d.shape[0]
    n = n_s + n_d

    nu_u = (c - 1) * c
    iv = _v_indexer(c, nu_u)
    I12 = np.zeros((n_d, n_s))
    for i in range(c):
        I12[i * c + 0, iv(i, c - 1)] = h * coupling_scale

    F = np.zeros((n, n))
    F[:n_s, :n_s] = A_s.toarray()
    F[n_s:, n_s:] = A_d.toarray()
    F[:n_s, n_s:] = I12.T / nu
    F[n_s:, :n_s] = -I12 / nu

    B_s = _drop_pressure_mean(_divergence(c, h).toarray())
    m = B_s.shape[0]
    B = np.concatenate([B_s, np.zeros((m, n_d))], axis=1)
    H2 = h * h * np.eye(m)
    meta = {"generator": "stokes_darcy_fd", "nu": float(nu), "grid": c,
            "h2_scale": h * h, "coupling_scale": float(coupling_scale)}
    return assemble(F, B, H2, meta=meta)


def synthetic(n, m, eta, C1, C2, seed=0):
    """System with prescribed assumption constants (H1 = H2 = I).

    N is a seeded random skew matrix rescaled to ||N||_2 = eta exactly; B has
    a seeded random orthogonal column/row structure with singular values
    log-uniform in [C2, C1] (the endpoints included, so the measured C1 and
    C2 match the request).
    """
    if not (0 < C2 <= C1):
        raise InvalidParamsError("need 0 < C2 <= C1")
    if m > n:
        raise InvalidParamsError("need m <= n")
    if eta < 0:
        raise InvalidParamsError("eta must be >= 0")
    if m < 2 and C2 < C1:
        raise InvalidParamsError("m = 1 admits only C1 == C2")
    rng = np.random.default_rng(seed)

    G = rng.standard_normal((n, n))
    N = (G - G.T) / 2.0
    if eta > 0:
        smax = np.linalg.svd(N, compute_uv=False)[0]
        if smax == 0.0:
            raise InvalidParamsError("cannot realize eta > 0 at this dimension")
        N *= eta / smax
    else:
        N = np.zeros((n, n))
    F = np.eye(n) + N

    U, _ = np.linalg.qr(rng.standard_normal((m, m)))
    V, _ = np.linalg.qr(rng.standard_normal((n, m)))
    if m == 1:
        svals = np.array([C1])
    else:
        inner = np.exp(rng.uniform(np.log(C2), np.log(C1), size=m - 2)) if m > 2 else []
        svals = np.sort(np.r_[C1, inner, C2])[::-1]
    B = U @ (svals[:, None] * V.T)

    meta = {"generator": "synthetic", "eta": float(eta), "C1": float(C1),
            "C2": float(C2), "seed": int(seed)}
    return assemble(F, B, np.eye(m), meta=meta)
