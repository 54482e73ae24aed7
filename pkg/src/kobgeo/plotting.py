"""Deterministic SVG figures (800 x 800 viewport)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_paths", "plot_orbit", "plot_table", "plot_end_tree", "SVG_SIZE"]

SVG_SIZE = 800
_RC = {
    "svg.hashsalt": "kobgeo",
    "svg.fonttype": "none",
    "font.size": 11,
    "axes.linewidth": 0.8,
    "lines.linewidth": 1.0,
}


def _figure():
    fig = plt.figure(figsize=(SVG_SIZE / 72, SVG_SIZE / 72), dpi=72)
    return fig, fig.add_subplot(1, 1, 1)


def _save(fig, path):
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


def _outline(ax, domain, window=None, h=None):
    if domain is None:
        return
    if hasattr(domain, "mask") and getattr(domain, "kind", "") == "raster":
        r = domain
    else:
        win = window or domain.default_window()
        h = h or max(win[1] - win[0], win[3] - win[2]) / 400
        r = domain.rasterize(h, window=win)
    c = r.centers()
    ax.contour(c.real, c.imag, r.mask.astype(float), levels=[0.5], colors="0.2", linewidths=0.8)


def plot_paths(path, domain, curves, title="", window=None, points=()):
    """Domain outline with polylines (iterables of complex points)."""
    curves = [np.asarray(z, dtype=complex) for z in curves if len(z)]
    if not curves:
        return None
    with plt.rc_context(_RC):
        fig, ax = _figure()
        _outline(ax, domain, window)
        for k, z in enumerate(curves):
            ax.plot(z.real, z.imag, color=plt.cm.viridis(k / max(1, len(curves) - 1)))
        pts = np.asarray(points, dtype=complex)
        if pts.size:
            ax.plot(pts.real, pts.imag, "o", color="crimson", markersize=3)
        ax.set_aspect("equal")
        ax.set_title(title)
        return _save(fig, path)


def plot_orbit(path, domain, orbit, title="", window=None):
    z = np.asarray(orbit, dtype=complex)
    if z.size == 0:
        return None
    with plt.rc_context(_RC):
        fig, ax = _figure()
        _outline(ax, domain, window)
        ax.plot(z.real, z.imag, "-", color="0.6", linewidth=0.5)
        ax.scatter(z.real, z.imag, c=np.arange(len(z)), cmap="plasma", s=8, zorder=3)
        ax.set_aspect("equal")
        ax.set_title(title)
        return _save(fig, path)


def plot_table(path, x, ys, xlabel="", ylabel="", title="", logx=False, logy=False, labels=None):
    """Line plot of one or more y columns against x."""
    x = np.asarray(x, dtype=float)
    ys = [np.asarray(y, dtype=float) for y in (ys if isinstance(ys, (list, tuple)) else [ys])]
    if x.size == 0 or not ys:
        return None
    with plt.rc_context(_RC):
        fig, ax = _figure()
        for k, y in enumerate(ys):
            ax.plot(x, y, "o-", markersize=3, label=None if labels is None else labels[k])
        if logx:
            ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        if labels is not None:
            ax.legend()
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        return _save(fig, path)


def plot_end_tree(path, tree, title=""):
    """Deepest-level labels of an end tree, unbounded components coloured."""
    lab = tree.labels[-1]
    unb = {c.label for c in tree.unbounded()}
    img = np.where(np.isin(lab, list(unb)), lab, 0).astype(float)
    img[~tree.closure] = np.nan
    x0, x1, y0, y1 = tree.raster.window()
    with plt.rc_context(_RC):
        fig, ax = _figure()
        ax.imshow(img, origin="lower", extent=(x0, x1, y0, y1), cmap="tab20", interpolation="nearest")
        ax.set_aspect("equal")
        ax.set_title(title)
        return _save(fig, path)
