"""Min-max polynomial bounds on sampled regions and GMRES bound curves.

E_n(S) = min over polynomials p of degree <= n with p(0) = 1 of
max_{z in S} |p(z)|.  On a sampled region boundary this is solved by Lawson's
iteratively reweighted least squares: solve a weighted least-squares fit,
multiply each weight by the attained modulus, renormalize, repeat until the
max stagnates.  The returned value is always the directly evaluated max of
the final polynomial (a feasible, hence valid, upper bound for the sample
set); since the competitors are analytic, boundary sampling suffices by the
maximum principle.

Complex coefficients are allowed: sets that are not conjugate-symmetric (as
preconditioned spectra and regions generally are not) need them, and for
conjugate-symmetric sets the optimizer is free to land on real coefficients.

The GMRES bound curve multiplies E_n(Omega_CG) by the spectral-set constant
2 + sqrt(7).  Raw values above 1 are vacuous but kept: that a min-max bound
degenerates to 1 when the region surrounds the origin is exactly the
phenomenon the certificate machinery exists to detect.  Use
``BoundCurve.clamped()`` for display.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateRegionError, NearDefectiveError
from .fov import RegionCG
from .linalg import as_matrix

__all__ = [
    "SPECTRAL_SET_CONSTANT",
    "BoundCurve",
    "estimate_En",
    "asymptotic_factor",
    "gmres_bound_curve",
    "spectral_bound",
]

SPECTRAL_SET_CONSTANT = 2.0 + np.sqrt(7.0)
LAWSON_ROUNDS = 200
LAWSON_STAGNATION = 1e-8
DEFECTIVE_KAPPA = 1e12


@dataclass
class BoundCurve:
    """Bound values per polynomial degree.

    values are raw (possibly > 1, i.e. vacuous); method labels the bound kind
    ("fov" for (2+sqrt7)*E_n on Omega_CG, "spectral" for kappa_H(V)*E_n on
    the eigenvalue set, "En" for the bare min-max).
    """

    degrees: list
    values: list
    region_id: str = ""
    method: str = "En"

    def clamped(self):
        return [min(v, 1.0) for v in self.values]


def _region_samples(region):
    if isinstance(region, RegionCG):
        return region.samples()
    return np.atleast_1d(np.asarray(region, dtype=complex))


def estimate_En(region, degree, rounds=LAWSON_ROUNDS, stagnation=LAWSON_STAGNATION,
                certify_samples=None):
    """Lawson-IRLS estimate of E_n on a sampled region.

    region may be a RegionCG or an array of complex samples.  The estimate is
    certified by direct evaluation of the final polynomial on the sample set
    (plus certify_samples when given, typically a denser resample), so it
    upper-bounds the true sample min-max.

    Raises DegenerateRegionError when there are fewer samples than free
    coefficients or when a sample sits at the origin.
    """
    z = _region_samples(region)
    if degree < 0:
        raise ValueError("degree must be >= 0")
    if degree == 0:
        return 1.0
    if z.size < degree:
        raise DegenerateRegionError(
            f"{z.size} samples cannot determine {degree} coefficients")
    if np.abs(z).min() == 0.0:
        raise DegenerateRegionError("sample set contains the origin")

    # p(z) = 1 + z q(z) with q expanded in the shifted-scaled monomials
    # ((z - z0)/R)^k for conditioning at moderate degrees
    z0 = z.mean()
    R = max(float(np.abs(z - z0).max()), np.finfo(float).tiny)
    V = z[:, None] * ((z[:, None] - z0) / R) ** np.arange(degree)[None, :]

    w = np.full(z.size, 1.0 / z.size)
    prev = np.inf
    best_val = np.inf
    best_coef = None
    for _ in range(rounds):
        sw = np.sqrt(w)
        coef, *_ = np.linalg.lstsq(sw[:, None] * V, -sw.astype(complex), rcond=None)
        e = np.abs(1.0 + V @ coef)
        cur = float(e.max())
        if cur < best_val:
            best_val, best_coef = cur, coef
        if cur < 1e-15:
            break
        if abs(cur - prev) <= stagnation * max(cur, np.finfo(float).tiny):
            break
        prev = cur
        w = w * e
        s = w.sum()
        if s <= 0:
            break
        w /= s

    if certify_samples is not None and best_coef is not None:
        zc = _region_samples(certify_samples)
        Vc = zc[:, None] * ((zc[:, None] - z0) / R) ** np.arange(degree)[None, :]
        best_val = max(best_val, float(np.abs(1.0 + Vc @ best_coef).max()))
    return best_val


def asymptotic_factor(region, n_max=12, rounds=LAWSON_ROUNDS):
    """Estimated asymptotic convergence factor rho = lim E_n^{1/n}.

    Fits log E_n against n by least squares over the window
    n in [n_max/2, n_max] (skipping the transient low degrees) and returns
    exp(slope).  This estimates exp(-g(0)) with g the exterior Green's
    function of the region, without ever computing g.
    """
    if n_max < 4:
        raise ValueError("n_max must be >= 4")
    samples = _region_samples(region)
    lo = int(np.ceil(n_max / 2))
    ns = np.arange(lo, n_max + 1)
    Es = np.array([estimate_En(samples, int(n), rounds=rounds) for n in ns])
    if np.any(Es <= 1e-14):
        return 0.0
    slope = np.polyfit(ns, np.log(Es), 1)[0]
    return float(np.exp(slope))


def gmres_bound_curve(cert, n_max, region_id=None):
    """The (2 + sqrt 7) * E_n(Omega_CG) residual bound, degrees 0..n_max.

    Final polynomials are certified on a 4x arclength resample of the region
    boundary.  Raw values above 1 are retained (vacuous bound); clamp only
    for display.
    """
    region = cert.region
    dense = region.resample(4)
    values = []
    for k in range(n_max + 1):
        ek = estimate_En(region, k, certify_samples=dense)
        values.append(SPECTRAL_SET_CONSTANT * ek)
    return BoundCurve(degrees=list(range(n_max + 1)), values=values,
                      region_id=region_id or region.source, method="fov")


def spectral_bound(A, space, degrees, tol=1e-10, maxit=10000):
    """Eigenvalue-based residual bound kappa_H(V) * min-max over the spectrum.

    V is the computed eigenvector matrix with columns normalized to unit
    H-norm; its H-condition number upper-bounds the best-conditioned choice,
    so the curve is an upper bound of the spectral bound (reported as such).
    Raises NearDefectiveError when kappa exceeds 1e12.
    """
    A = as_matrix(A, "A")
    lam, V = np.linalg.eig(A)
    # kappa_H of V with columns scaled to unit H-norm: kappa_2(L^T V D L^{-T})
    T = space.tf(V.astype(complex))
    norms = np.linalg.norm(T, axis=0)  # = ||v_i||_H
    if np.any(norms == 0.0):
        raise NearDefectiveError("eigenvector with zero norm")
    W = space.itf_right(T / norms[None, :])
    s = np.linalg.svd(W, compute_uv=False)
    if s[-1] <= 0 or s[0] / s[-1] > DEFECTIVE_KAPPA:
        raise NearDefectiveError(
            f"eigenvector matrix condition {s[0] / max(s[-1], np.finfo(float).tiny):.3e} "
            "exceeds 1e12")
    kappa = float(s[0] / s[-1])
    values = [kappa * estimate_En(lam, int(k)) for k in degrees]
    return BoundCurve(degrees=list(degrees), values=values,
                      region_id="spectrum", method="spectral")
