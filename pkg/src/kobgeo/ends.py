"""End trees from exhaustions by closed balls.

At each radius R the closure raster (mask dilated by one cell) minus the
closed ball of radius R is split into 8-connected components.  A component
reaching the window border is unbounded (the domain continues past the
window); the others are bounded and never end candidates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

from kobgeo.domains import LatticeComplement, PlanarDomain, Raster

log = logging.getLogger(__name__)

__all__ = [
    "UnionFind",
    "union_find_label",
    "EndComponent",
    "EndTree",
    "build_end_tree",
    "count_ends",
    "classify_tail",
    "branch_bijection",
    "binary_tree_raster",
    "horizontal_strip_raster",
    "TailClass",
]

_EIGHT = np.ones((3, 3), dtype=bool)


class UnionFind:
    """Disjoint sets over 0..n-1 with path halving and union by size."""

    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a):
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra


def union_find_label(mask):
    """8-connected labels (1..k, 0 = background) by a raster scan with union-find."""
    mask = np.asarray(mask, dtype=bool)
    ny, nx = mask.shape
    idx = -np.ones(mask.shape, dtype=np.int64)
    cells = np.argwhere(mask)
    idx[mask] = np.arange(len(cells))
    uf = UnionFind(len(cells))
    for i, j in cells:
        a = idx[i, j]
        for di, dj in ((0, -1), (-1, -1), (-1, 0), (-1, 1)):
            ii, jj = i + di, j + dj
            if 0 <= ii < ny and 0 <= jj < nx and idx[ii, jj] >= 0:
                uf.union(a, idx[ii, jj])
    labels = np.zeros(mask.shape, dtype=np.int64)
    roots = {}
    for k, (i, j) in enumerate(cells):
        r = uf.find(k)
        labels[i, j] = roots.setdefault(r, len(roots) + 1)
    return labels, len(roots)


@dataclass(frozen=True)
class EndComponent:
    level: int
    label: int
    parent: Optional[int]
    bounded: bool
    cells: int

    @property
    def key(self):
        return (self.level, self.label)


@dataclass
class EndTree:
    radii: tuple
    raster: Raster
    closure: np.ndarray
    labels: list
    components: list
    notes: list = field(default_factory=list)

    @property
    def depth(self):
        return len(self.radii)

    def level(self, k):
        return [c for c in self.components if c.level == k]

    def unbounded(self, k=None):
        k = self.depth - 1 if k is None else k
        return [c for c in self.level(k) if not c.bounded]

    def component_at(self, z, level=None):
        """Label of the component containing z at a level (0 if none).

        Points beyond the window are projected radially onto its border."""
        level = self.depth - 1 if level is None else level
        lab = self.labels[level]
        z = complex(z)
        x0, x1, y0, y1 = self.raster.window()
        inside_window = x0 <= z.real <= x1 and y0 <= z.imag <= y1
        if not inside_window:
            z = _project_to_window(z, (x0, x1, y0, y1))
        i, j = self.raster.cell_index(z)
        ny, nx = lab.shape
        i, j = int(np.clip(i, 0, ny - 1)), int(np.clip(j, 0, nx - 1))
        if lab[i, j] > 0 or inside_window:
            return int(lab[i, j])
        # nearest labelled cell along the border
        r = 3
        sub = lab[max(0, i - r):i + r + 1, max(0, j - r):j + r + 1]
        vals = sub[sub > 0]
        return int(np.bincount(vals).argmax()) if vals.size else 0

    def outline(self):
        """Nested textual outline of the tree."""
        lines = []

        def walk(c, indent):
            tag = "bounded" if c.bounded else "unbounded"
            lines.append(f"{'  ' * indent}L{c.level} #{c.label} R>{self.radii[c.level]:g} {tag} cells={c.cells}")
            for ch in self.components:
                if ch.level == c.level + 1 and ch.parent == c.label:
                    walk(ch, indent + 1)

        for c in self.level(0):
            walk(c, 0)
        return "\n".join(lines)

    def rows(self):
        return [(c.level, c.label, -1 if c.parent is None else c.parent, int(c.bounded), c.cells)
                for c in self.components]


def _project_to_window(z, win, shrink=1e-9):
    x0, x1, y0, y1 = win
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    c = complex(cx, cy)
    d = z - c
    tx = (0.5 * (x1 - x0)) / abs(d.real) if d.real else np.inf
    ty = (0.5 * (y1 - y0)) / abs(d.imag) if d.imag else np.inf
    t = min(tx, ty) * (1 - shrink)
    return c + d * min(t, 1.0)


def _raster_for(domain, h, window):
    if isinstance(domain, Raster):
        return domain
    if window is None:
        window = getattr(domain, "end_window", None)
        window = window() if window is not None else domain.default_window()
    return domain.rasterize(h, window=window)


def build_end_tree(domain, radii, h=0.125, window=None, center=0j) -> EndTree:
    """Components of closure minus closed balls B(center, R) for increasing R."""
    radii = tuple(float(r) for r in radii)
    if any(b <= a for a, b in zip(radii[:-1], radii[1:])):
        raise ValueError("radii must be strictly increasing")
    raster = _raster_for(domain, h, window)
    closure = ndimage.binary_dilation(raster.mask, structure=_EIGHT)
    # dilation must not grow past the array: cells on the border stay as is
    c = raster.centers()
    dist = np.abs(c - complex(center))
    border = np.zeros(closure.shape, dtype=bool)
    border[0, :] = border[-1, :] = border[:, 0] = border[:, -1] = True
    labels, comps, notes = [], [], []
    if not np.any(closure & (dist > radii[0])):
        notes.append("domain lies inside the smallest ball")
    prev = None
    for k, R in enumerate(radii):
        region = closure & (dist > R)
        lab, n = ndimage.label(region, structure=_EIGHT)
        touches = np.zeros(n + 1, dtype=bool)
        touches[np.unique(lab[border & region])] = True
        sizes = np.bincount(lab.ravel(), minlength=n + 1)
        for lbl in range(1, n + 1):
            parent = None
            if prev is not None:
                owners = np.unique(prev[lab == lbl])
                owners = owners[owners > 0]
                if len(owners) != 1:
                    raise AssertionError(f"component {lbl} at level {k} has {len(owners)} parents")
                parent = int(owners[0])
            comps.append(EndComponent(k, lbl, parent, not touches[lbl], int(sizes[lbl])))
        labels.append(lab)
        prev = lab
    return EndTree(radii, raster, closure, labels, comps, notes)


def count_ends(tree: EndTree) -> int:
    """Unbounded components at the deepest level."""
    if tree.depth == 0:
        return 0
    return len(tree.unbounded())


@dataclass(frozen=True)
class TailClass:
    kind: str  # "end", "boundary point", "interior point", "not convergent"
    end: Optional[tuple] = None
    point: Optional[complex] = None
    visited: tuple = ()

    def same_target(self, other, tol=1e-6):
        if self.kind != other.kind:
            return False
        if self.kind == "end":
            return self.end == other.end
        if self.kind in ("boundary point", "interior point"):
            return abs(self.point - other.point) <= tol
        return False


def classify_tail(tree: Optional[EndTree], seq, domain: Optional[PlanarDomain] = None,
                  cauchy_tol=1e-6, boundary_tol=1e-2):
    """End, boundary point, interior point or not convergent, from the last
    third of ``seq``."""
    z = np.asarray(seq, dtype=complex)
    n = len(z)
    tail = z[-max(2, n // 3):]
    middle = z[n // 3: max(n // 3 + 1, 2 * n // 3)]
    if domain is None and tree is not None:
        domain = tree.raster.source or tree.raster
    visited = ()
    if tree is not None and tree.depth > 0:
        R = tree.radii[-1]
        far = np.abs(tail) > R
        if np.any(far):
            labs = [tree.component_at(p) for p in tail]
            visited = tuple(sorted({(tree.depth - 1, lb) for lb in labs if lb > 0}))
            unb = {c.label for c in tree.unbounded()}
            if np.all(far) and len(set(labs)) == 1 and labs[0] in unb:
                return TailClass("end", (tree.depth - 1, labs[0]), visited=visited)
            if np.all(far):
                return TailClass("not convergent", visited=visited)
    diam = float(np.max(np.abs(tail - tail[-1])))
    if diam <= cauchy_tol:
        p = complex(tail[-1])
        if domain is not None and _near_boundary(domain, p, boundary_tol * 1e-3):
            return TailClass("boundary point", point=complex(domain.nearest_boundary_point(p)))
        return TailClass("interior point", point=p)
    if domain is not None:
        try:
            d_tail = np.asarray(domain._clearance(tail), dtype=float)
            d_mid = np.asarray(domain._clearance(middle), dtype=float)
            b_tail = np.asarray(domain.nearest_boundary_point(tail), dtype=complex)
        except Exception:  # noqa: BLE001 - clearance is undefined for some points
            d_tail = None
        if d_tail is not None and d_tail[-1] <= boundary_tol and d_tail.max() <= d_mid.max() + 1e-15:
            spread = float(np.max(np.abs(b_tail - b_tail[-1])))
            if spread <= max(boundary_tol, 10 * d_tail.max()):
                return TailClass("boundary point", point=complex(b_tail[-1]))
    if tree is not None and not visited:
        labs = [tree.component_at(p) for p in tail if abs(p) > tree.radii[-1]]
        visited = tuple(sorted({(tree.depth - 1, lb) for lb in labs if lb > 0}))
    return TailClass("not convergent", visited=visited)


def _near_boundary(domain, p, tol):
    try:
        return not bool(domain.contains(np.array(p))) or float(domain._clearance(np.array(p))) <= tol
    except Exception:  # noqa: BLE001
        return True


def branch_bijection(tree_a: EndTree, tree_b: EndTree):
    """Map the deepest unbounded branches of ``tree_b`` (larger radii) into
    ``tree_a`` by containment.  Returns (is_bijection, mapping)."""
    if tree_b.radii[-1] < tree_a.radii[-1]:
        tree_a, tree_b = tree_b, tree_a
    la = tree_a.labels[-1]
    lb = tree_b.labels[-1]
    if la.shape != lb.shape:
        raise ValueError("trees must share a raster")
    ua = {c.label for c in tree_a.unbounded()}
    mapping = {}
    for c in tree_b.unbounded():
        owners = np.unique(la[lb == c.label])
        owners = owners[owners > 0]
        if len(owners) != 1:
            return False, mapping
        mapping[c.label] = int(owners[0])
    image = set(mapping.values())
    injective = len(image) == len(mapping)
    return injective and image == ua, mapping


# --------------------------------------------------------------------------
# test rasters


def _segment_distance(c, a, b):
    d = b - a
    t = np.clip(((c - a) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
    return np.abs(c - (a + t * d))


def binary_tree_raster(depth=5, h=0.25, window_radius=48.0, half_width=0.4, base=0.5):
    """Neighbourhood of a binary tree: level-k nodes at radius base*2^k with
    2^k equally spaced angles, then rays from the leaves to the window edge."""
    L = window_radius
    n = int(round(2 * L / h))
    origin = complex(-L + h / 2, -L + h / 2)
    xs = origin.real + h * np.arange(n)
    c = xs[None, :] + 1j * xs[:, None]
    mask = np.zeros(c.shape, dtype=bool)
    nodes = {(0, 0): 0j}
    for k in range(1, depth + 1):
        for j in range(2 ** k):
            ang = 2 * np.pi * (j + 0.5) / 2 ** k
            nodes[(k, j)] = base * 2 ** k * np.exp(1j * ang)
    segs = [(nodes[(k - 1, j // 2)], nodes[(k, j)]) for k in range(1, depth + 1) for j in range(2 ** k)]
    for j in range(2 ** depth):
        leaf = nodes[(depth, j)]
        segs.append((leaf, leaf / abs(leaf) * 2 * L))
    for a, b in segs:
        mask |= _segment_distance(c, a, b) < half_width
    return Raster(mask=mask, origin=origin, spacing=h)


def horizontal_strip_raster(half_length=20.0, h=0.125):
    """The strip R x (0, 1) cut to |Re z| < half_length."""
    nx = int(round(2 * half_length / h))
    ny = int(round(2.0 / h))
    origin = complex(-half_length + h / 2, -0.5 + h / 2)
    xs = origin.real + h * np.arange(nx)
    ys = origin.imag + h * np.arange(ny)
    c = xs[None, :] + 1j * ys[:, None]
    mask = (c.imag > 0) & (c.imag < 1)
    return Raster(mask=mask, origin=origin, spacing=h)


def lattice_end_raster(half_width=40.0, h=0.125, r=0.25):
    return LatticeComplement(r).rasterize(h, window=(-half_width, half_width, -half_width, half_width))
