"""Numeric Kobayashi distances on a cell grid.

Shortest paths in the 8-connected cell graph (edge weight lambda(midpoint)
times edge length) give an initial upper estimate; the path is then shortened
by endpoint-fixed coordinate relaxation of its interior knots.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy import ndimage
from scipy.sparse.csgraph import dijkstra

from kobgeo import constants
from kobgeo.domains import Raster
from kobgeo.errors import QueryError

log = logging.getLogger(__name__)

_OFFSETS = ((0, 1), (1, 0), (1, 1), (1, -1))
_GL_X = np.sqrt(0.6)
_GL_W = (5.0 / 9.0, 8.0 / 9.0)


@dataclass(frozen=True)
class NumericDistance:
    value: float
    graph: float
    error: float
    knots: np.ndarray

    @property
    def finite(self):
        return np.isfinite(self.value)


class GridGeometry:
    """Graph over the cells of ``raster`` weighted by ``lam``.

    ``domain`` answers membership for relaxation moves (defaults to the
    raster's source, or the raster itself).
    """

    def __init__(self, raster: Raster, lam, domain=None):
        self.raster = raster
        self.lam = lam
        if domain is None:
            domain = getattr(lam, "domain", None) or raster.source or raster
        self.domain = domain
        self.h = raster.spacing
        mask = raster.mask
        self._cells = np.argwhere(mask)
        idx = -np.ones(mask.shape, dtype=np.int64)
        idx[mask] = np.arange(len(self._cells))
        self._idx = idx
        centers = raster.centers()
        self._centers = centers[mask]
        ny, nx = mask.shape
        rows, cols, wts = [], [], []
        for di, dj in _OFFSETS:
            a, b = self._shifted_pairs(idx, di, dj)
            ok = (a >= 0) & (b >= 0)
            a, b = a[ok], b[ok]
            za, zb = self._centers[a], self._centers[b]
            mid = 0.5 * (za + zb)
            inside = np.asarray(self.domain.contains(mid), dtype=bool)
            a, b, mid = a[inside], b[inside], mid[inside]
            w = self.lam(mid) * np.abs(zb[inside] - za[inside])
            rows.append(a)
            cols.append(b)
            wts.append(w)
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        wts = np.concatenate(wts)
        n = len(self._cells)
        self.graph = sp.csr_matrix((wts, (rows, cols)), shape=(n, n))
        self._labels = None

    @staticmethod
    def _shifted_pairs(idx, di, dj):
        ny, nx = idx.shape
        i0, i1 = max(0, -di), ny - max(0, di)
        j0, j1 = max(0, -dj), nx - max(0, dj)
        a = idx[i0:i1, j0:j1]
        b = idx[i0 + di:i1 + di, j0 + dj:j1 + dj]
        return a.ravel(), b.ravel()

    @property
    def n_nodes(self):
        return len(self._cells)

    def node_of(self, z):
        """Index of the mask cell nearest to ``z``."""
        z = complex(z)
        i, j = self.raster.cell_index(z)
        i, j = int(i), int(j)
        ny, nx = self._idx.shape
        if 0 <= i < ny and 0 <= j < nx and self._idx[i, j] >= 0:
            return int(self._idx[i, j])
        d = np.abs(self._centers - z)
        k = int(np.argmin(d))
        if d[k] > 2 * self.h:
            raise QueryError(f"point {z!r} is not inside the raster window")
        return k

    def center(self, node):
        return complex(self._centers[node])

    def _connector(self, z, node):
        c = self._centers[node]
        if abs(c - z) == 0:
            return 0.0
        return float(self.lam(np.array([0.5 * (c + z)]))[0] * abs(c - z))

    def graph_distances(self, sources, targets=None):
        """Graph distance matrix between point lists (including endpoint connectors)."""
        sources = np.atleast_1d(np.asarray(sources, dtype=complex))
        targets = sources if targets is None else np.atleast_1d(np.asarray(targets, dtype=complex))
        sn = np.array([self.node_of(z) for z in sources])
        tn = np.array([self.node_of(z) for z in targets])
        sc = np.array([self._connector(z, k) for z, k in zip(sources, sn)])
        tc = np.array([self._connector(z, k) for z, k in zip(targets, tn)])
        uniq, inv = np.unique(sn, return_inverse=True)
        D = dijkstra(self.graph, directed=False, indices=uniq)
        out = D[inv][:, tn] + sc[:, None] + tc[None, :]
        same = sources[:, None] == targets[None, :]
        out[same] = 0.0
        return out

    def graph_path(self, z, w):
        z, w = complex(z), complex(w)
        a, b = self.node_of(z), self.node_of(w)
        D, pred = dijkstra(self.graph, directed=False, indices=a, return_predecessors=True)
        if not np.isfinite(D[b]):
            return np.inf, None
        nodes = [b]
        while nodes[-1] != a:
            nodes.append(int(pred[nodes[-1]]))
        nodes.reverse()
        pts = [z] + [self.center(k) for k in nodes] + [w]
        # drop duplicate endpoint knots
        pts = np.array(pts)
        keep = np.concatenate([[True], np.abs(np.diff(pts)) > 0])
        value = float(D[b]) + self._connector(z, a) + self._connector(w, b)
        return value, pts[keep]

    def segment_cost(self, a, b):
        """Length of the chords a -> b by 3-point Gauss-Legendre quadrature."""
        m = 0.5 * (a + b)
        d = 0.5 * (b - a)
        lam = self.lam
        q = (_GL_W[0] * lam(m - _GL_X * d) + _GL_W[1] * lam(m) + _GL_W[0] * lam(m + _GL_X * d))
        return q * np.abs(d)

    def polyline_length(self, pts):
        pts = np.asarray(pts, dtype=complex)
        if len(pts) < 2:
            return 0.0
        return float(np.sum(self.segment_cost(pts[:-1], pts[1:])))

    def relax(self, pts, rtol=constants.RELAX_RTOL, max_sweeps=4000):
        """Shorten a polyline by coordinate moves of its interior knots.

        Coarse-to-fine: the path is resampled to a few knots, relaxed, then
        refined by midpoint insertion until the knot spacing reaches ``h``.
        Each level moves odd and even knots alternately by +-step in x and y,
        starting at step = spacing/4 and halving when the relative gain of a
        sweep falls below ``rtol``.
        """
        pts = np.asarray(pts, dtype=complex)
        if len(pts) <= 2:
            return pts
        h = self.h
        seg = np.abs(np.diff(pts))
        total = seg.sum()
        s = np.concatenate([[0.0], np.cumsum(seg)])
        n0 = int(max(2, min(16, total // (4 * h))))
        cur = _resample(pts, s, n0)
        while not self._chords_inside(cur):
            n0 *= 2
            if n0 >= len(pts):
                cur = pts
                break
            cur = _resample(pts, s, n0)
        while True:
            cur = self._relax_level(cur, rtol, max_sweeps)
            spacing = np.abs(np.diff(cur)).max()
            if spacing <= 1.5 * h:
                break
            mids = 0.5 * (cur[1:] + cur[:-1])
            nxt = np.empty(2 * len(cur) - 1, dtype=complex)
            nxt[0::2] = cur
            nxt[1::2] = mids
            cur = nxt
        return cur

    def _chords_inside(self, pts, n=8):
        f = (np.arange(n + 1) / n)[None, :]
        samples = pts[:-1, None] * (1 - f) + pts[1:, None] * f
        return bool(np.all(self.domain.contains(samples.ravel())))

    def _relax_level(self, pts, rtol, max_sweeps):
        pts = pts.copy()
        n = len(pts)
        if n <= 2:
            return pts
        spacing = float(np.median(np.abs(np.diff(pts))))
        step = spacing / 4
        min_step = min(self.h, spacing) / 64
        cost = self.segment_cost
        contains = self.domain.contains
        length = self.polyline_length(pts)
        sweeps = 0
        while step >= min_step and sweeps < max_sweeps:
            before = length
            for parity in (1, 2):
                k = np.arange(parity, n - 1, 2)
                if k.size == 0:
                    continue
                for sign in (1.0, -1.0):
                    a, z, b = pts[k - 1], pts[k], pts[k + 1]
                    # move across the local chord only, so knots cannot bunch up
                    chord = b - a
                    normal = 1j * chord / np.maximum(np.abs(chord), 1e-300)
                    old = cost(a, z) + cost(z, b)
                    zn = z + sign * step * normal
                    ok = np.asarray(contains(zn), dtype=bool)
                    ok &= np.asarray(contains(0.5 * (a + zn)), dtype=bool)
                    ok &= np.asarray(contains(0.5 * (zn + b)), dtype=bool)
                    if not ok.any():
                        continue
                    kk, a, zn, b, old = k[ok], a[ok], zn[ok], b[ok], old[ok]
                    new = cost(a, zn) + cost(zn, b)
                    better = new < old
                    pts[kk[better]] = zn[better]
            length = self.polyline_length(pts)
            sweeps += 1
            if before - length < rtol * before:
                step /= 2
        return pts

    def distance(self, z, w, relax=True, length_fn=None) -> NumericDistance:
        """Graph distance refined by relaxation; error = graph - relaxed."""
        z, w = complex(z), complex(w)
        if z == w:
            return NumericDistance(0.0, 0.0, 0.0, np.array([z]))
        graph, pts = self.graph_path(z, w)
        if pts is None:
            return NumericDistance(np.inf, np.inf, 0.0, np.array([z, w]))
        if not relax:
            return NumericDistance(graph, graph, 0.0, pts)
        knots = self.relax(pts)
        value = length_fn(knots) if length_fn is not None else self.polyline_length(knots)
        value = min(value, graph)
        return NumericDistance(value, graph, max(graph - value, 0.0), knots)

    def components(self):
        """Connected-component label per node (8-connectivity of the graph)."""
        if self._labels is None:
            lab, _ = ndimage.label(self.raster.mask, structure=np.ones((3, 3), bool))
            self._labels = lab[self.raster.mask]
        return self._labels


def _resample(pts, s, n):
    """``n`` + 1 knots at equal arclength along a polyline with cumulative length ``s``."""
    target = np.linspace(0.0, s[-1], n + 1)
    x = np.interp(target, s, pts.real)
    y = np.interp(target, s, pts.imag)
    out = x + 1j * y
    out[0], out[-1] = pts[0], pts[-1]
    return out
