"""Static SVG figures: certificate regions and bound-versus-residual overlays.

Output is deterministic: a fixed hash salt for element ids and no date
metadata, so identical inputs reproduce identical files up to matplotlib's
float formatting.
"""

from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "fovk"

import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["region_svg", "overlay_svg"]

_SAVE_KW = {"format": "svg", "metadata": {"Date": None}}


def region_svg(cert, path, title=None):
    """Shaded certificate region with the dashed removed disk and dotted
    imaginary-part bounds at +-c."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    pts = cert.boundary.points
    ax.plot(np.r_[pts.real, pts.real[:1]], np.r_[pts.imag, pts.imag[:1]],
            color="black", lw=0.8, label="field of values")
    for lp in cert.region.loops:
        lp = np.atleast_1d(lp)
        if lp.size == 1:
            ax.plot(lp.real, lp.imag, marker="o", color="tab:cyan")
            continue
        ax.fill(np.r_[lp.real, lp.real[:1]], np.r_[lp.imag, lp.imag[:1]],
                color="tab:cyan", alpha=0.35, lw=0.0)
    r = cert.inner_radius
    th = np.linspace(0.0, 2.0 * np.pi, 256)
    ax.plot(r * np.cos(th), r * np.sin(th), "k--", lw=1.0, label="removed disk |z| = 1/b")
    span = max(cert.a, r) * 1.15
    ax.plot([-span, span], [cert.c, cert.c], "k:", lw=1.0, label="|Im z| = c")
    ax.plot([-span, span], [-cert.c, -cert.c], "k:", lw=1.0)
    ax.axhline(0.0, color="gray", lw=0.5)
    ax.axvline(0.0, color="gray", lw=0.5)
    ax.set_xlim(-span, span)
    ylim = max(cert.boundary.max_im * 1.3, r * 1.2, 1e-3)
    ax.set_ylim(-ylim, ylim)
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    verdict = "bc < 1" if cert.cond4_pass else "bc >= 1"
    origin = "origin excluded" if cert.origin_excluded else "origin surrounded"
    ax.set_title(title or f"bc = {cert.bc:.3g} ({verdict}), {origin}")
    ax.legend(loc="upper right", fontsize=8)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def overlay_svg(path, measured, curves, title=None):
    """Measured relative residuals against bound curves (clamped at 1)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    its = np.arange(len(measured))
    ax.semilogy(its, np.maximum(measured, 1e-300), "o-", ms=3, label="measured ||r_j||/||r_0||")
    for label, curve in curves:
        vals = np.array(curve.clamped(), dtype=float)
        ax.semilogy(curve.degrees, np.maximum(vals, 1e-300), "--", label=label)
    ax.set_xlabel("iteration / degree")
    ax.set_ylabel("relative residual bound")
    if title:
        ax.set_title(title)
    ax.legend(loc="lower left", fontsize=8)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
