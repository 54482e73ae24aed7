"""Gromov products, four-point delta scans, slim triangles and the two
non-hyperbolicity experiments (the lattice complement and thin annuli)."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from kobgeo import constants
from kobgeo.domains import Annulus, LatticeComplement
from kobgeo.errors import DomainError, IntegrityError, PathError, QueryError
from kobgeo.metric import solve_density_pde, strip_density
from kobgeo.oracle import Geometry, as_geometry, exact_distance
from kobgeo.grid import GridGeometry
from kobgeo.paths import Path, construct_almost_geodesic

log = logging.getLogger(__name__)

__all__ = [
    "Quadruple",
    "GromovReport",
    "gromov_product",
    "four_point_delta",
    "is_gromov_sequence",
    "slim_check",
    "rips_scan",
    "lattice_qi_experiment",
    "annulus_fatness",
    "annulus_core_constant",
]


def gromov_product(d_ox, d_oy, d_xy, tol=1e-9):
    """(x|y)_o = (d(o,x) + d(o,y) - d(x,y)) / 2."""
    d = np.array([d_ox, d_oy, d_xy], dtype=float)
    scale = tol * max(1.0, float(np.max(np.abs(d))))
    if np.any(d < -scale):
        raise IntegrityError("distances must be nonnegative")
    if d_xy > d_ox + d_oy + scale or d_ox > d_oy + d_xy + scale or d_oy > d_ox + d_xy + scale:
        raise IntegrityError(f"triangle inequality violated by ({d_ox}, {d_oy}, {d_xy})")
    return 0.5 * (d_ox + d_oy - d_xy)


@dataclass(frozen=True)
class Quadruple:
    """Indices (a, b, c, o), their points and the three products at o."""

    a: int
    b: int
    c: int
    o: int
    ab: float
    bc: float
    ac: float
    points: Optional[tuple] = None
    distances: Optional[dict] = None

    @property
    def gap(self):
        return min(self.ab, self.bc) - self.ac

    @classmethod
    def from_matrix(cls, D, a, b, c, o, points=None):
        dist = {(i, j): float(D[i, j]) for i in (a, b, c, o) for j in (a, b, c, o)}
        prod = lambda x, y: 0.5 * (D[o, x] + D[o, y] - D[x, y])  # noqa: E731
        pts = None if points is None else tuple(complex(points[i]) for i in (a, b, c, o))
        return cls(a, b, c, o, float(prod(a, b)), float(prod(b, c)), float(prod(a, c)), pts, dist)


@dataclass
class GromovReport:
    n: int
    delta: Optional[float]
    witness: Optional[Quadruple]
    runtime: float = 0.0
    quadruples: int = 0
    note: str = ""

    @property
    def insufficient(self):
        return self.delta is None


def _check_matrix(D):
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise IntegrityError("distance matrix must be square")
    scale = 1e-9 * (1.0 + float(np.max(np.abs(D)))) if D.size else 0.0
    if not np.allclose(D, D.T, rtol=0, atol=scale):
        raise IntegrityError("distance matrix is not symmetric")
    if np.any(np.abs(np.diag(D)) > scale) or np.any(D < -scale):
        raise IntegrityError("distance matrix needs a zero diagonal and nonnegative entries")
    return 0.5 * (D + D.T)


def four_point_delta(D, points=None, block=16) -> GromovReport:
    """Exact max over ordered quadruples of distinct indices of
    min{(a|b)_o, (b|c)_o} - (a|c)_o.  Ties go to the lexicographically
    smallest (a, b, c, o)."""
    t0 = time.perf_counter()
    D = _check_matrix(D)
    n = D.shape[0]
    if n < 4:
        return GromovReport(n, None, None, note="insufficient points")
    best = -np.inf
    best_idx = None
    idx = np.arange(n)
    for o in range(n):
        P = 0.5 * (D[o][:, None] + D[o][None, :] - D)
        bad_ac = (idx[:, None] == idx[None, :]) | (idx[:, None] == o) | (idx[None, :] == o)
        for b0 in range(0, n, block):
            bs = idx[b0:b0 + block]
            p = P[bs]
            M = np.minimum(p[:, :, None], p[:, None, :]) - P[None, :, :]
            M[:, bad_ac] = -np.inf
            k = np.arange(len(bs))
            M[k, bs, :] = -np.inf
            M[k, :, bs] = -np.inf
            if bs[0] <= o <= bs[-1]:
                M[o - bs[0]] = -np.inf
            m = float(M.max())
            if m < best:
                continue
            hits = np.argwhere(M == m)
            cand = min((int(a), int(bs[bi]), int(c), o) for bi, a, c in hits)
            if m > best or cand < best_idx:
                best, best_idx = m, cand
    a, b, c, o = best_idx
    w = Quadruple.from_matrix(D, a, b, c, o, points)
    return GromovReport(n, float(best), w, time.perf_counter() - t0, n * (n - 1) * (n - 2) * (n - 3))


def _as_oracle(oracle):
    if callable(oracle) and not isinstance(oracle, Geometry):
        return lambda P: np.array([[oracle(p, q) if i != j else 0.0 for j, q in enumerate(P)]
                                   for i, p in enumerate(P)])
    geo = as_geometry(oracle)
    return lambda P: geo.distance_matrix(P)[0]


@dataclass
class GromovSequenceReport:
    products: np.ndarray
    tail_minima: np.ndarray
    consistent: bool
    verdict: str


def is_gromov_sequence(points, o, oracle, levels=3) -> GromovSequenceReport:
    """Pairwise products (x_m|x_n)_o and tail minima; consistent iff the
    minima strictly increase over the last ``levels`` tail levels."""
    pts = np.asarray(points, dtype=complex)
    if len(pts) < 4:
        raise ValueError("need at least 4 points")
    allp = np.concatenate([[complex(o)], pts])
    D = _as_oracle(oracle)(allp)
    d0 = D[0, 1:]
    Dx = D[1:, 1:]
    P = 0.5 * (d0[:, None] + d0[None, :] - Dx)
    n = len(pts)
    off = ~np.eye(n, dtype=bool)
    tails = np.array([P[k:, k:][off[k:, k:]].min() for k in range(n - 1)])
    last = tails[-levels:]
    ok = bool(np.all(np.diff(last) > 1e-12 * max(1.0, float(np.max(np.abs(last))))))
    verdict = "consistent with Gromov sequence" if ok else "not a Gromov sequence"
    return GromovSequenceReport(P, tails, ok, verdict)


def _thin(z, m):
    if len(z) <= m:
        return z
    return z[np.linspace(0, len(z) - 1, m).round().astype(int)]


def _sides_join(sides, tol):
    ends = [(s.z[0], s.z[-1]) for s in sides]
    verts = []
    for i in range(3):
        a0, a1 = ends[i]
        b0, b1 = ends[(i + 1) % 3]
        if min(abs(a1 - b0), abs(a1 - b1), abs(a0 - b0), abs(a0 - b1)) > tol:
            return False
    # three distinct endpoint pairs must close up
    for i in range(3):
        verts.extend(ends[i])
    return True


def slim_check(sides, oracle, samples=200, tol=1e-9):
    """Smallest delta making the triangle delta-slim, over knot samples."""
    if len(sides) != 3:
        raise PathError("a triangle needs three sides")
    if not _sides_join(sides, tol):
        raise PathError("triangle sides do not share endpoints")
    geo = as_geometry(oracle)
    zs = [_thin(s.z, samples) for s in sides]
    if all(np.all(z == z[0]) for z in zs):
        return 0.0
    delta = 0.0
    for i in range(3):
        other = np.concatenate([zs[(i + 1) % 3], zs[(i + 2) % 3]])
        if geo.exact:
            M = exact_distance(geo.domain, zs[i][:, None], other[None, :])
        else:
            M = geo.distance_matrix(zs[i], other, relax=False)[0]
        delta = max(delta, float(M.min(axis=1).max()))
    return delta


@dataclass
class RipsReport:
    kappa: float
    slim: list = field(default_factory=list)
    slim_max: Optional[float] = None
    delta4: Optional[float] = None
    witness: Optional[Quadruple] = None
    slack_rips: Optional[float] = None
    slack_hyp: Optional[float] = None
    certificates: list = field(default_factory=list)
    tolerance: float = 1e-3
    runtime: float = 0.0

    @property
    def holds(self):
        if self.slim_max is None:
            return True
        return self.slack_rips <= self.tolerance and self.slack_hyp <= self.tolerance


def _side(geo, a, b, kappa, n):
    if a == b:
        return Path.constant(a), None
    return construct_almost_geodesic(geo, a, b, kappa, n=n)


def rips_scan(geom, kappa, triples, samples=200, n=constants.CERT_GRID, tolerance=1e-3,
              side_points=4) -> RipsReport:
    """Slim constants of kappa-triangles with certified sides against a
    sampled four-point delta.

    delta4 is the larger of the four-point delta over all vertices and, per
    triangle, over its vertices plus side_points knots inside each side.  Three
    vertices alone always give zero.

    Reports slack_rips = delta_slim - (3 delta4 + 6 kappa) and
    slack_hyp = delta4 - (3 delta_slim + 6 kappa); both must be <= tolerance.
    """
    t0 = time.perf_counter()
    geo = as_geometry(geom)
    rep = RipsReport(kappa, tolerance=tolerance)
    triples = [tuple(complex(v) for v in tr) for tr in triples]
    if not triples:
        return rep
    delta4 = 0.0
    for a, b, c in triples:
        sides = []
        for p, q in ((a, b), (b, c), (c, a)):
            path, cert = _side(geo, p, q, kappa, n)
            if cert is not None and cert.verdict == "fail":
                raise PathError(f"side {p!r} -> {q!r} failed certification")
            rep.certificates.append(cert)
            sides.append(path)
        rep.slim.append(slim_check(sides, geo, samples))
        pts = np.concatenate([_thin(sd.z, side_points + 2)[:-1] for sd in sides])
        if len(pts) >= 4:
            g = four_point_delta(geo.distance_matrix(pts)[0], pts)
            if g.delta > delta4:
                delta4, rep.witness = g.delta, g.witness
    verts = []
    for tr in triples:
        for v in tr:
            if v not in verts:
                verts.append(v)
    verts = np.array(verts)
    rep.slim_max = max(rep.slim)
    if len(verts) >= 4:
        g = four_point_delta(geo.distance_matrix(verts)[0], verts)
        if g.delta > delta4:
            delta4, rep.witness = g.delta, g.witness
    rep.delta4 = delta4
    rep.slack_rips = rep.slim_max - (3 * rep.delta4 + 6 * kappa)
    rep.slack_hyp = rep.delta4 - (3 * rep.slim_max + 6 * kappa)
    rep.runtime = time.perf_counter() - t0
    return rep


# --------------------------------------------------------------------------
# lattice complement


@dataclass
class LatticeQIReport:
    z0: complex
    R: int
    C1: float
    C2: float
    sandwich_ok: bool
    max_upper_excess: float
    deltas: dict
    growth_ok: bool
    distances: np.ndarray
    lattice: np.ndarray
    runtime: float = 0.0
    notes: list = field(default_factory=list)


def lattice_points(z0, R):
    ms = np.arange(-R, R + 1)
    m, k = np.meshgrid(ms, ms, indexing="ij")
    return m.ravel(), k.ravel(), complex(z0) + m.ravel() + 1j * k.ravel()


def lattice_qi_experiment(R=8, z0=0.5 + 0.5j, r=0.25, radii=(2, 4, 8), pde_h=1 / 32,
                          graph_h=1 / 16, margin=2, growth=0.10, field=None) -> LatticeQIReport:
    """Quasi-isometry constants of F(m, n) = z0 + m + in and four-point
    delta growth over boxes |m|, |n| <= R_k.

    Distances are graph distances on a window around the box, with the
    periodic unit-cell density.
    """
    t0 = time.perf_counter()
    dom = LatticeComplement(r)
    z0 = complex(z0)
    if not dom.contains(np.array(z0)):
        raise QueryError(f"base point {z0!r} lies in a hole")
    R = max(R, max(radii))
    fld = field if field is not None else solve_density_pde(dom, h=pde_h)
    L = R + margin
    win = (z0.real - L - graph_h / 2, z0.real + L + graph_h / 2,
           z0.imag - L - graph_h / 2, z0.imag + L + graph_h / 2)
    raster = dom.rasterize(graph_h, window=win)
    grid = GridGeometry(raster, fld, domain=dom)
    ms, ns, pts = lattice_points(z0, R)
    D = grid.graph_distances(pts)
    D = 0.5 * (D + D.T)
    l1 = np.abs(ms[:, None] - ms[None, :]) + np.abs(ns[:, None] - ns[None, :])
    i0 = int(np.flatnonzero((ms == 0) & (ns == 0))[0])
    i_re = int(np.flatnonzero((ms == 1) & (ns == 0))[0])
    i_im = int(np.flatnonzero((ms == 0) & (ns == 1))[0])
    C2 = float(max(D[i0, i_re], D[i0, i_im]))
    off = l1 > 0
    C1 = float(np.min(D[off] / l1[off]))
    excess = float(np.max(D[off] - C2 * l1[off]))
    sandwich = excess <= 1e-9 * C2 * l1.max() and C1 > 0
    deltas = {}
    for Rk in sorted(radii):
        sel = (np.abs(ms) <= Rk) & (np.abs(ns) <= Rk)
        rep = four_point_delta(D[np.ix_(sel, sel)], pts[sel])
        deltas[Rk] = rep
    vals = [deltas[k].delta for k in sorted(deltas)]
    growth_ok = all(b >= (1 + growth) * a and b > a for a, b in zip(vals[:-1], vals[1:]))
    return LatticeQIReport(z0, R, C1, C2, sandwich, excess, deltas, growth_ok, D,
                           np.stack([ms, ns], axis=1), time.perf_counter() - t0)


# --------------------------------------------------------------------------
# thin annuli


def annulus_core_constant(s):
    """c making t -> -s/2 + i c s t unit speed for the strip density."""
    return 1.0 / (s * float(strip_density(-s / 2, s)))


@dataclass(frozen=True)
class FatnessRow:
    s: float
    c: float
    gap: float
    predicted: float
    adjacent: float
    adjacent_predicted: float
    delta4: float
    c_validation: float

    @property
    def rel_error(self):
        return abs(self.gap - self.predicted) / abs(self.predicted)


def annulus_witness(s):
    """Points p, x, z, y at angles 0, pi/2, -pi, 3pi/2 on |z| = e^{-s/2}."""
    r = math.exp(-s / 2)
    ang = np.array([0.0, math.pi / 2, -math.pi, 3 * math.pi / 2])
    return r * np.exp(1j * ang)


def annulus_fatness(s_values, validation_gaps=(0.01, 0.1, 0.5)):
    """Witness gap (x|y)_p - min{(x|z)_p, (y|z)_p} against -pi/(2cs)."""
    rows = []
    for s in s_values:
        s = float(s)
        if not 0 < s <= 1:
            raise DomainError("s", "annulus modulus must lie in (0, 1]")
        A = Annulus(s)
        c = annulus_core_constant(s)
        p, x, z, y = annulus_witness(s)
        d = lambda u, v: float(exact_distance(A, u, v))  # noqa: E731
        xy = gromov_product(d(p, x), d(p, y), d(x, y))
        xz = gromov_product(d(p, x), d(p, z), d(x, z))
        yz = gromov_product(d(p, y), d(p, z), d(y, z))
        gap = xy - min(xz, yz)
        predicted = -math.pi / (2 * c * s)
        # unit speed of the core curve t -> exp(-s/2 + i c s t), checked on short gaps
        core = lambda t: np.exp(-s / 2 + 1j * c * s * t)  # noqa: E731
        val = max(abs(d(core(0.0), core(g)) - g) for g in validation_gaps)
        pts = np.array([p, x, z, y])
        D = exact_distance(A, pts[:, None], pts[None, :])
        d4 = four_point_delta(D, pts).delta
        rows.append(FatnessRow(s, c, gap, predicted, d(p, x), math.pi / (2 * c * s), d4, val))
    return rows
