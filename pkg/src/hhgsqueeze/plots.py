"""SVG figure output for scans and Wigner maps.

Figures are a convenience view of the CSV artifacts, never the primary
output; both writers strip volatile metadata so reruns are directly
diffable.
"""

from __future__ import annotations

import math

import matplotlib
import numpy as np

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "hhgsqueeze"

import matplotlib.pyplot as plt  # noqa: E402

_SAVE_KW = {"format": "svg", "metadata": {"Date": None}}


def scan_svg(ceps, dbs, psis, path: str, backend: str = "") -> str:
    """Squeezing gain versus CEP, squeeze angle encoded as marker color."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(ceps, dbs, "-", lw=0.8, color="#9aa4ad", zorder=1)
    sc = ax.scatter(ceps, dbs, c=psis, cmap="twilight", vmin=0.0,
                    vmax=math.pi, s=28, zorder=2, edgecolors="none")
    cb = fig.colorbar(sc, ax=ax)
    cb.set_label(r"squeeze angle $\psi$ (rad)")
    cb.set_ticks([0.0, math.pi / 2, math.pi])
    cb.set_ticklabels(["0", r"$\pi/2$", r"$\pi$"])
    ax.set_xlabel("CEP (rad)")
    ax.set_ylabel("squeezing gain (dB)")
    title = "CEP scan" + (f" ({backend})" if backend else "")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def _sigma_ellipse(mean, cov, n_points: int = 181):
    """1-sigma contour of a 2x2 covariance: mean + sqrt(cov) . circle."""
    vals, vecs = np.linalg.eigh(np.asarray(cov, dtype=float))
    vals = np.clip(vals, 0.0, None)
    th = np.linspace(0.0, 2.0 * math.pi, n_points)
    circle = np.vstack([np.cos(th), np.sin(th)])
    pts = (vecs * np.sqrt(vals)) @ circle
    return mean[0] + pts[0], mean[1] + pts[1]


def wigner_svg(xs, ps, w, path: str, psi: float | None = None,
               mean=None, cov=None, cep: float | None = None,
               r_eff: float | None = None) -> str:
    """Filled Wigner map with 1-sigma ellipse and major-axis guides."""
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    im = ax.imshow(w.T, origin="lower", cmap="viridis", aspect="auto",
                   extent=(xs[0], xs[-1], ps[0], ps[-1]),
                   interpolation="nearest")
    fig.colorbar(im, ax=ax, label=r"$W(x, p)$")
    cx = 0.0 if mean is None else float(mean[0])
    cy = 0.0 if mean is None else float(mean[1])
    if cov is not None:
        ex, ey = _sigma_ellipse((cx, cy), cov)
        ax.plot(ex, ey, color="w", lw=1.2, label=r"$1\sigma$ contour")
    if psi is not None:
        span = 0.45 * min(xs[-1] - xs[0], ps[-1] - ps[0])
        dx, dy = span * math.cos(psi), span * math.sin(psi)
        ax.plot([cx - dx, cx + dx], [cy - dy, cy + dy], "w--", lw=1.0,
                label=r"major axis $\psi$")
    if cov is not None or psi is not None:
        ax.legend(loc="upper right", fontsize=8)
    notes = []
    if cep is not None:
        notes.append(rf"$\phi = {cep:.3f}$")
    if psi is not None:
        notes.append(rf"$\psi = {psi:.3f}$")
    if r_eff is not None:
        notes.append(rf"$r_\mathrm{{eff}} = {r_eff:.3g}$")
    if notes:
        ax.text(0.02, 0.98, "\n".join(notes), transform=ax.transAxes,
                va="top", ha="left", fontsize=8, color="w")
    ax.set_xlabel("x")
    ax.set_ylabel("p")
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path
