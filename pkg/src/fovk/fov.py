"""Field of values in the H-geometry, spectral-set regions, and certificates.

The H-field of values of A is the set of weighted Rayleigh quotients
x* H A x / x* H x.  With H = L L^T and the similarity At = L^T A L^{-T} it
equals the ordinary field of values W(At), so every computation here works on
the transformed matrix.  Boundary points come from the classical rotation
method: for each angle theta, the top eigenvector x of the Hermitian part of
e^{i theta} At furnishes the supporting point x* At x, and the polygon through
these points is an inscribed approximation of the (convex) boundary.

A convergence certificate for GMRES on A in the H-norm collects

    a  = ||A||_H,    b = ||A^{-1}||_H,    c = ||(HA - A^T H)/2||_{H,H^{-1}},

checks the product condition b*c < 1, and builds the region

    Omega_CG = W_H(A)  minus  the open disk of radius 1/b about 0,

which is a (2 + sqrt 7)-spectral set for A.  When b*c >= 1 the slab bound on
the imaginary part is inconclusive, but the certificate still decides whether
the actual region surrounds the origin (winding-number test on the sampled
boundary loops), which is what GMRES convergence hinges on.

Complex arithmetic stays inside this module; all inputs are real.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla
from shapely.geometry import MultiPoint, Point, Polygon
from shapely.geometry.polygon import orient

from .exceptions import DimensionGuardError, EigFailureError
from .krylov import LinearOperator
from .linalg import (
    WeightedSpace,
    as_matrix,
    inv_norm,
    lu_solve,
    op_norm,
    weighted_transform,
)

__all__ = [
    "FovBoundary",
    "RegionCG",
    "FovCertificate",
    "fov_boundary",
    "constants_abc",
    "certificate",
    "numerical_radius",
    "omega_d_region",
    "winding_number",
]

DEFAULT_ANGLES = 256
DEFAULT_REGION_POINTS = 512
DIMENSION_GUARD = 2500
COND4_MARGIN = 1e-6
_DENSE_EIG_CUTOFF = 400


@dataclass
class FovBoundary:
    """Sampled boundary of W_H(A): supporting points ordered by rotation angle."""

    points: np.ndarray   # complex supporting points
    angles: np.ndarray
    max_im: float
    max_abs: float


@dataclass
class RegionCG:
    """Boundary sample of Omega_CG = W_H(A) with the inner disk removed.

    loops   -- list of complex arrays, each one closed boundary loop (two
               loops when the disk splits the field of values, or when the
               disk sits strictly inside and leaves a hole)
    inner_radius -- radius of the removed disk
    source  -- "fov" for a computed field of values, "slab-annulus" for the
               surrogate region built from (a, b, c) alone
    """

    loops: list
    inner_radius: float
    source: str = "fov"

    def samples(self):
        return np.concatenate([np.atleast_1d(lp) for lp in self.loops])

    def resample(self, factor=4):
        """Linear arclength refinement of each loop (refined points that fall
        inside the removed disk are projected back onto it)."""
        out = []
        for lp in self.loops:
            lp = np.atleast_1d(lp)
            if lp.size < 2:
                out.append(lp.copy())
                continue
            closed = np.r_[lp, lp[0]]
            pts = []
            for s in range(len(closed) - 1):
                seg = closed[s] + (closed[s + 1] - closed[s]) * np.arange(factor) / factor
                pts.append(seg)
            ref = np.concatenate(pts)
            r = self.inner_radius
            if r > 0:
                mags = np.abs(ref)
                inside = (mags < r) & (mags > 0)
                ref[inside] *= r / mags[inside]
            out.append(ref)
        return RegionCG(loops=out, inner_radius=self.inner_radius, source=self.source)


@dataclass
class FovCertificate:
    """Constants, region, and verdicts of the convergence certificate."""

    a: float
    b: float
    c: float
    bc: float
    cond4_pass: bool
    inner_radius: float
    boundary: FovBoundary
    region: RegionCG
    origin_excluded: bool
    numerical_radius_inv: float | None = None
    eta: float | None = None
    C1: float | None = None
    C2: float | None = None

    def to_json_dict(self):
        d = {
            "schema_version": 1,
            "a": self.a,
            "b": self.b,
            "c": self.c,
            "bc": self.bc,
            "cond4_pass": self.cond4_pass,
            "inner_radius": self.inner_radius,
            "origin_excluded": self.origin_excluded,
            "numerical_radius_inv": self.numerical_radius_inv,
            "eta": self.eta,
            "C1": self.C1,
            "C2": self.C2,
            "boundary": {
                "angles": self.boundary.angles.tolist(),
                "re": self.boundary.points.real.tolist(),
                "im": self.boundary.points.imag.tolist(),
                "max_im": self.boundary.max_im,
                "max_abs": self.boundary.max_abs,
            },
            "region": {
                "source": self.region.source,
                "inner_radius": self.region.inner_radius,
                "loops": [
                    {"re": np.atleast_1d(lp).real.tolist(),
                     "im": np.atleast_1d(lp).imag.tolist()}
                    for lp in self.region.loops
                ],
            },
        }
        return d


def _transformed(A, space):
    A = as_matrix(A, "A")
    if A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if A.shape[0] != space.dim:
        raise ValueError(f"A has dimension {A.shape[0]}, space has {space.dim}")
    return weighted_transform(A, space, space)


def _top_eigpair(Hmat):
    """Largest eigenvalue and eigenvector of a complex Hermitian matrix."""
    dim = Hmat.shape[0]
    if dim <= _DENSE_EIG_CUTOFF:
        try:
            lam, vec = np.linalg.eigh(Hmat)
        except np.linalg.LinAlgError as exc:
            raise EigFailureError(str(exc)) from exc
        return float(lam[-1]), vec[:, -1]
    v0 = np.ones(dim) / np.sqrt(dim)
    for tol, it in ((0, dim * 100), (1e-12, dim * 400)):
        try:
            lam, vec = spla.eigsh(Hmat, k=1, which="LA", v0=v0, tol=tol, maxiter=it)
            return float(lam[0]), vec[:, 0]
        except spla.ArpackNoConvergence:
            continue
    raise EigFailureError("Lanczos iteration for the rotated Hermitian part did not converge")


def fov_boundary(A, space, n_angles=DEFAULT_ANGLES):
    """Boundary of W_H(A) by the rotation method.

    For each angle theta_k = 2 pi k / n_angles the top eigenvector of
    Herm(e^{i theta_k} At) supplies one supporting point x* At x.  The points
    are returned in angle order; their hull is inscribed in W_H(A) and each
    point lies exactly on the boundary.
    """
    if n_angles < 8:
        raise ValueError("n_angles must be >= 8")
    At = _transformed(A, space)
    angles = 2.0 * np.pi * np.arange(n_angles) / n_angles
    pts = np.empty(n_angles, dtype=complex)
    Atc = At.astype(complex)
    for k, th in enumerate(angles):
        w = np.exp(1j * th)
        Hk = (w * Atc + np.conj(w) * Atc.conj().T) / 2.0
        _, x = _top_eigpair(Hk)
        pts[k] = np.vdot(x, Atc @ x) / np.vdot(x, x)
    return FovBoundary(points=pts, angles=angles,
                       max_im=float(np.abs(pts.imag).max()),
                       max_abs=float(np.abs(pts).max()))


def constants_abc(A, space, tol=1e-10, maxit=10000):
    """The three certificate constants.

    a = ||A||_H and b = ||A^{-1}||_H through the weighted-norm engines;
    c = ||(HA - A^T H)/2||_{H,H^{-1}}, which equals the spectral norm of the
    skew part of the transformed matrix At.
    """
    At = _transformed(A, space)
    a = op_norm(A, space, space, tol, maxit).value
    b = inv_norm(A, space, space, tol, maxit).value
    skew = (At - At.T) / 2.0
    c = op_norm(skew, WeightedSpace.euclidean(At.shape[0]),
                WeightedSpace.euclidean(At.shape[0]), tol, maxit).value
    return a, b, c


def winding_number(loop, z0=0j):
    """Winding number of a sampled closed loop about z0."""
    v = np.atleast_1d(loop) - z0
    if v.size < 3:
        return 0.0
    rolled = np.r_[v[1:], v[:1]]
    return float(np.angle(rolled / v).sum() / (2.0 * np.pi))


def _region_from_hull(points, radius, n_points=DEFAULT_REGION_POINTS):
    """Clip the convex hull of boundary points against {|z| >= radius}."""
    xy = np.c_[points.real, points.imag]
    hull = MultiPoint(xy).convex_hull  # Point / LineString / Polygon by degeneracy

    if hull.geom_type != "Polygon":
        # degenerate field of values (a point or a segment): clip directly
        if hull.geom_type == "Point":
            kept = points[np.abs(points) >= radius * (1 - 1e-12)]
            if kept.size == 0:
                kept = points
            return [np.array([kept[np.argmax(np.abs(kept))]])]
        clipped = hull.difference(Point(0, 0).buffer(radius, quad_segs=128))
        pieces = getattr(clipped, "geoms", [clipped])
        loops = []
        for g in pieces:
            if g.is_empty:
                continue
            cc = np.asarray(g.coords)
            loops.append(cc[:, 0] + 1j * cc[:, 1])
        return loops or [np.array([points[np.argmax(np.abs(points))]])]

    ndisk = 512
    # circumscribed polygon so sampled points never fall inside the true disk
    rr = radius / np.cos(np.pi / ndisk)
    phi = np.linspace(0.0, 2.0 * np.pi, ndisk, endpoint=False)
    disk = Polygon(np.c_[rr * np.cos(phi), rr * np.sin(phi)])
    region = hull.difference(disk)
    if region.is_empty:
        kept = points[np.abs(points) >= radius * (1 - 1e-12)]
        return [np.array([kept[np.argmax(np.abs(kept))]])] if kept.size else [points[:1]]

    geoms = list(region.geoms) if region.geom_type == "MultiPolygon" else [region]
    total_len = sum(g.exterior.length + sum(r.length for r in g.interiors) for g in geoms)
    loops = []
    for g in geoms:
        g = orient(g, 1.0)  # exterior counter-clockwise, holes clockwise
        for ring in [g.exterior, *g.interiors]:
            npts = max(16, int(round(n_points * ring.length / max(total_len, 1e-300))))
            ts = np.linspace(0.0, ring.length, npts, endpoint=False)
            coords = np.array([ring.interpolate(t).coords[0] for t in ts])
            lp = coords[:, 0] + 1j * coords[:, 1]
            mags = np.abs(lp)
            inside = (mags < radius) & (mags > 0)
            lp[inside] *= radius / mags[inside]
            loops.append(lp)
    return loops


def _origin_excluded(loops):
    """True when no sampled boundary loop winds around the origin."""
    return all(abs(winding_number(lp)) < 0.5 for lp in loops)


def omega_d_region(a, b, c, n_points=DEFAULT_REGION_POINTS):
    """The slab-annulus surrogate region {1/b <= |z| <= a, |Im z| <= c}."""
    ndisk = 512
    phi = np.linspace(0.0, 2.0 * np.pi, ndisk, endpoint=False)
    outer = Polygon(np.c_[a * np.cos(phi), a * np.sin(phi)])
    slab = Polygon([(-2 * a, -c), (2 * a, -c), (2 * a, c), (-2 * a, c)])
    band = outer.intersection(slab)
    r = 1.0 / b
    rr = r / np.cos(np.pi / ndisk)
    disk = Polygon(np.c_[rr * np.cos(phi), rr * np.sin(phi)])
    region = band.difference(disk)
    if region.is_empty:
        return RegionCG(loops=[], inner_radius=r, source="slab-annulus")
    geoms = list(region.geoms) if region.geom_type == "MultiPolygon" else [region]
    total_len = sum(g.exterior.length + sum(rg.length for rg in g.interiors) for g in geoms)
    loops = []
    for g in geoms:
        g = orient(g, 1.0)
        for ring in [g.exterior, *g.interiors]:
            npts = max(16, int(round(n_points * ring.length / max(total_len, 1e-300))))
            ts = np.linspace(0.0, ring.length, npts, endpoint=False)
            coords = np.array([ring.interpolate(t).coords[0] for t in ts])
            lp = coords[:, 0] + 1j * coords[:, 1]
            mags = np.abs(lp)
            inside = (mags < r) & (mags > 0)
            lp[inside] *= r / mags[inside]
            loops.append(lp)
    return RegionCG(loops=loops, inner_radius=r, source="slab-annulus")


def _materialize(A_op):
    if isinstance(A_op, LinearOperator):
        eye = np.eye(A_op.dim)
        return np.stack([A_op(eye[:, j]) for j in range(A_op.dim)], axis=1)
    return as_matrix(A_op, "A")


def certificate(A_op, space, n_angles=DEFAULT_ANGLES, max_dim=DIMENSION_GUARD,
                region_points=DEFAULT_REGION_POINTS, compute_numerical_radius=False,
                eta=None, C1=None, C2=None):
    """Assemble the full convergence certificate for A in the H-geometry.

    A_op may be a dense matrix or a LinearOperator; operators larger than
    max_dim are refused (DimensionGuardError), never silently approximated.
    cond4_pass is the strict product test bc <= 1 - 1e-6; origin_excluded
    reports whether the actual region Omega_CG fails to surround the origin,
    which can hold even when the product test is violated (two-component
    regions).  Lowering n_angles coarsens the region but never the constants.
    """
    dim = A_op.dim if isinstance(A_op, LinearOperator) else as_matrix(A_op, "A").shape[0]
    if dim > max_dim:
        raise DimensionGuardError(
            f"operator dimension {dim} exceeds the materialization guard {max_dim}")
    A = _materialize(A_op)
    a, b, c = constants_abc(A, space)
    bc = b * c
    boundary = fov_boundary(A, space, n_angles)
    radius = 1.0 / b
    loops = _region_from_hull(boundary.points, radius, region_points)
    region = RegionCG(loops=loops, inner_radius=radius, source="fov")
    w_inv = None
    if compute_numerical_radius:
        Ainv = lu_solve(A, np.eye(dim))
        w_inv = numerical_radius(Ainv, space, n_angles)
    return FovCertificate(
        a=a, b=b, c=c, bc=bc,
        cond4_pass=bool(bc <= 1.0 - COND4_MARGIN),
        inner_radius=radius,
        boundary=boundary,
        region=region,
        origin_excluded=_origin_excluded(loops),
        numerical_radius_inv=w_inv,
        eta=eta, C1=C1, C2=C2,
    )


def numerical_radius(A, space, n_angles=DEFAULT_ANGLES):
    """Numerical radius w(A) in the H-geometry.

    Evaluates max over theta of lambda_max(Herm(e^{i theta} At)) on the same
    angle grid as fov_boundary, then refines around the best angle by
    golden-section search to an angle tolerance of 1e-8.
    """
    At = _transformed(A, space).astype(complex)

    def g(th):
        w = np.exp(1j * th)
        Hk = (w * At + np.conj(w) * At.conj().T) / 2.0
        lam, _ = _top_eigpair(Hk)
        return lam

    angles = 2.0 * np.pi * np.arange(n_angles) / n_angles
    vals = np.array([g(th) for th in angles])
    kbest = int(np.argmax(vals))
    delta = 2.0 * np.pi / n_angles
    lo, hi = angles[kbest] - delta, angles[kbest] + delta

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = g(x1), g(x2)
    best = max(vals[kbest], f1, f2)
    while hi - lo > 1e-8:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = g(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = g(x1)
        best = max(best, f1, f2)
    return float(best)
