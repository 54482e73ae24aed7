"""Distance oracles: closed forms on model domains, grid geometry elsewhere.

Closed-form distances use K = asinh(sqrt(X)) with X the invariant of the
uniformizing model; the annulus and punctured disk minimize over deck
translates of a lift (the exponential covers both).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from kobgeo.domains import (
    Annulus,
    ChainedAnnuli,
    Disk,
    HalfPlane,
    LatticeComplement,
    PlanarDomain,
    PuncturedDisk,
    Raster,
    Strip,
)
from kobgeo.errors import KobgeoError, QueryError
from kobgeo.grid import GridGeometry
from kobgeo.metric import DensityField, density, solve_density_pde
from kobgeo.parallel import pmap

__all__ = ["Geometry", "as_geometry", "exact_distance", "exact_geodesic", "lift_window"]

TWO_PI = 2 * math.pi


def _c(z):
    return np.asarray(z, dtype=complex)


def _strip_X(z, w, s):
    a1, a2 = np.pi * z.imag / s, np.pi * w.imag / s
    b1, b2 = -np.pi * z.real / s, -np.pi * w.real / s
    return (np.sinh((a1 - a2) / 2) ** 2 + np.sin((b1 - b2) / 2) ** 2) / (np.sin(b1) * np.sin(b2))


def _left_half_X(z, w):
    return np.abs(z - w) ** 2 / (4 * z.real * w.real)


def lift_window(X_of_k, start=3):
    """Minimize X_of_k(k) over integer deck indices.

    The window starts at |k| <= start and grows while a window edge attains
    the minimum.  Returns (min X, argmin k, final window half-width).
    """
    m = start
    while True:
        ks = np.arange(-m, m + 1)
        vals = np.stack([X_of_k(k) for k in ks])
        arg = np.argmin(vals, axis=0)
        if not np.any((arg == 0) | (arg == len(ks) - 1)) or m > 64:
            return np.min(vals, axis=0), ks[arg], m
        m *= 2


def _lifts(domain, z, w):
    """Principal lifts and the principal deck offset for covering kinds."""
    lz, lw = np.log(z), np.log(w)
    # put the angular gap in (-pi, pi]; the search still runs over k
    dth = np.angle(w / z)
    return lz, lz.real + 1j * (lz.imag + dth) + (lw.real - lz.real)


def exact_distance(domain, z, w, return_k=False):
    """Closed-form Kobayashi distance, broadcasting over z and w."""
    z, w = np.broadcast_arrays(_c(z), _c(w))
    if isinstance(domain, Disk):
        R, c = domain.radius, domain.center
        X = R * R * np.abs(z - w) ** 2 / ((R * R - np.abs(z - c) ** 2) * (R * R - np.abs(w - c) ** 2))
    elif isinstance(domain, HalfPlane):
        X = np.abs(z - w) ** 2 / (4 * z.imag * w.imag)
    elif isinstance(domain, Strip):
        X = _strip_X(z, w, domain.width)
    elif isinstance(domain, (Annulus, PuncturedDisk)):
        lz, lw = _lifts(domain, z, w)
        if isinstance(domain, Annulus):
            s = domain.s
            # only the sinh term depends on the deck index
            da = np.pi * (lz.imag - lw.imag) / s
            sin_part = np.sin(np.pi * (lw.real - lz.real) / (2 * s)) ** 2
            den = np.sin(-np.pi * lz.real / s) * np.sin(-np.pi * lw.real / s)
            step = 2 * np.pi ** 2 / s
            # far deck translates overflow to inf, which never wins the minimum
            with np.errstate(over="ignore"):
                X, k, _ = lift_window(lambda k: (np.sinh((da - step * k) / 2) ** 2 + sin_part) / den)
        else:
            X, k, _ = lift_window(lambda k: _left_half_X(lz, lw + 1j * TWO_PI * k))
        out = np.arcsinh(np.sqrt(X))
        return (out, k) if return_k else out
    else:
        raise KobgeoError(f"no closed-form distance for {domain.kind}")
    out = np.arcsinh(np.sqrt(X))
    return (out, np.zeros(out.shape, dtype=int)) if return_k else out


# --------------------------------------------------------------------------
# geodesics


def _to_half_plane(domain):
    """(forward, inverse) maps between the (lifted) domain and {Im > 0}."""
    if isinstance(domain, HalfPlane):
        return (lambda z: z), (lambda W: W)
    if isinstance(domain, (Strip, Annulus)):
        s = domain.width if isinstance(domain, Strip) else domain.s
        return (lambda z: np.exp(-1j * np.pi * z / s)), (lambda W: 1j * s * np.log(W) / np.pi)
    if isinstance(domain, PuncturedDisk):
        return (lambda z: -1j * z), (lambda W: 1j * W)
    raise KobgeoError(f"no closed-form geodesics for {domain.kind}")


def _shoot(W0, W1, t):
    """Points at distance t from W0 toward W1 in {Im > 0}.

    A real affine map sends W0 to i and the Cayley map i -> 0 then turns the
    geodesic into the ray tanh(t) e^{i phi}.  phi comes from
    1 - 2i/(V + i) and 1 - u from 2e^{-2t}/(1 + e^{-2t}), so nothing cancels
    even when W1 is 30 or more units away.
    """
    x0, y0 = W0.real, W0.imag
    V = (W1 - x0) / y0
    g = -2j / (V + 1j)
    phi = math.atan2(g.imag, 1.0 + g.real)
    e = np.exp(-2.0 * np.asarray(t, dtype=float))
    th = (1 - e) / (1 + e)
    rot = complex(math.cos(phi), math.sin(phi))
    one_minus_rot = -2j * math.sin(phi / 2) * complex(math.cos(phi / 2), math.sin(phi / 2))
    one_minus_u = 2 * e / (1 + e) + th * one_minus_rot
    one_plus_u = 1 + th * rot
    return x0 + y0 * (1j * one_plus_u / one_minus_u)


def _half_plane_geodesic(W1, W2, K):
    """Unit-speed geodesic W1 -> W2 in {Im > 0}, each half shot from its
    nearer endpoint.

    |W| is monotone along every geodesic, so after scaling to
    |W1| |W2| = 1 a half shot from the smaller-modulus end never cancels.
    The other half is shot in the picture of the isometry W -> -1/W.
    """
    D = math.sqrt(abs(W1) * abs(W2))
    A, B = W1 / D, W2 / D
    inv = lambda W: -1 / W  # noqa: E731

    def gamma(t):
        t = np.asarray(t, dtype=float)
        near = t <= K / 2
        out = np.empty(t.shape, dtype=complex)
        if abs(A) <= abs(B):
            out[near] = _shoot(A, B, t[near])
            out[~near] = inv(_shoot(inv(B), inv(A), K - t[~near]))
        else:
            out[near] = inv(_shoot(inv(A), inv(B), t[near]))
            out[~near] = _shoot(B, A, K - t[~near])
        out *= D
        return out[()] if out.ndim == 0 else out

    return gamma


def exact_geodesic(domain, z, w):
    """(K, sigma) with sigma(t), 0 <= t <= K, the unit-speed geodesic z -> w."""
    z, w = complex(z), complex(w)
    if isinstance(domain, Disk):
        return _disk_geodesic(domain, z, w)
    covering = isinstance(domain, (Annulus, PuncturedDisk))
    if covering:
        K, k = exact_distance(domain, z, w, return_k=True)
        lz, lw = _lifts(domain, np.array(z), np.array(w))
        a, b = complex(lz), complex(lw) + 1j * TWO_PI * int(k)
    else:
        a, b = z, w
        K = exact_distance(domain, z, w)
    K = float(K)
    fwd, inv = _to_half_plane(domain)
    if K == 0:
        return 0.0, lambda t: np.full(np.shape(t), z, dtype=complex)
    # translate the lifted pair along the boundary to keep the images moderate
    shift = 0.5 * (a.real + b.real) if isinstance(domain, HalfPlane) else 0.5j * (a.imag + b.imag)
    gamma = _half_plane_geodesic(complex(fwd(a - shift)), complex(fwd(b - shift)), K)

    def sigma(t):
        p = shift + inv(gamma(t))
        if covering:
            p = np.exp(p)
        return p

    return K, sigma


def _disk_geodesic(domain, z, w):
    K = float(exact_distance(domain, z, w))
    c, R = domain.center, domain.radius
    u1, u2 = (z - c) / R, (w - c) / R
    W = (u2 - u1) / (1 - np.conj(u1) * u2)
    direction = W / abs(W) if abs(W) > 0 else 1.0
    # re-centre at the midpoint so tanh is only evaluated on [-K/2, K/2]
    v = math.tanh(K / 2) * direction
    mid = (v + u1) / (1 + np.conj(u1) * v)
    W = (u2 - mid) / (1 - np.conj(mid) * u2)
    direction = W / abs(W) if abs(W) > 0 else direction

    def sigma(t):
        v = np.tanh(np.asarray(t, dtype=float) - K / 2) * direction
        return c + R * (v + mid) / (1 + np.conj(mid) * v)

    return K, sigma


# --------------------------------------------------------------------------


@dataclass(eq=False)
class Geometry:
    """Density, membership and distance for one domain.

    ``exact`` geometries answer distances in closed form with zero error;
    numeric ones use a GridGeometry (graph + relaxation) with error bar
    graph - relaxed.
    """

    domain: PlanarDomain
    lam: object
    exact: bool
    grid: Optional[GridGeometry] = None
    field: Optional[DensityField] = None
    relax: bool = True

    def density(self, z):
        return self.lam(_c(z))

    def contains(self, z):
        return self.domain.contains(z)

    def clearance(self, z):
        return self.domain.clearance(z)

    def distance(self, z, w):
        if self.exact:
            out = exact_distance(self.domain, z, w)
            return float(out) if np.ndim(out) == 0 else out
        return self.distance_with_error(z, w)[0]

    def distance_with_error(self, z, w):
        self._check(np.array([z, w]))
        if self.exact:
            return float(exact_distance(self.domain, z, w)), 0.0
        res = self.grid.distance(z, w, relax=self.relax)
        return res.value, res.error

    def _check(self, pts):
        if not np.all(self.domain.contains(pts)):
            raise QueryError("point outside the domain")

    def distance_matrix(self, points, targets=None, relax=None):
        """(D, E): distance matrix and per-entry error bars."""
        p = np.atleast_1d(_c(points))
        q = p if targets is None else np.atleast_1d(_c(targets))
        self._check(np.concatenate([p, q]))
        if self.exact:
            D = exact_distance(self.domain, p[:, None], q[None, :])
            return D, np.zeros(D.shape)
        relax = self.relax if relax is None else relax
        G = self.grid.graph_distances(p, q)
        if not relax:
            return G, np.full(G.shape, np.nan)
        sym = targets is None
        pairs = [(i, j) for i in range(len(p)) for j in range(len(q)) if (not sym or j > i) and p[i] != q[j]]
        results = pmap(lambda ij: self.grid.distance(p[ij[0]], q[ij[1]]), pairs)
        D = G.copy()
        E = np.zeros(G.shape)
        for (i, j), r in zip(pairs, results):
            D[i, j], E[i, j] = r.value, r.error
            if sym:
                D[j, i], E[j, i] = r.value, r.error
        return D, E

    def geodesic_knots(self, z, w):
        """Knots of a numeric shortest path z -> w."""
        if self.exact:
            raise KobgeoError("use exact_geodesic for closed-form domains")
        res = self.grid.distance(z, w, relax=self.relax)
        if not res.finite:
            raise QueryError("points lie in different components")
        return res

    def segment_cost(self, a, b):
        if self.grid is not None:
            return self.grid.segment_cost(a, b)
        m = 0.5 * (a + b)
        d = 0.5 * (b - a)
        x = math.sqrt(0.6)
        q = 5 / 9 * self.lam(m - x * d) + 8 / 9 * self.lam(m) + 5 / 9 * self.lam(m + x * d)
        return q * np.abs(d)


_DEFAULT_H = {"lattice_complement": 1 / 32, "chained_annuli": 1 / 64}
_DEFAULT_WINDOW = {"lattice_complement": (-3.0, 3.0, -3.0, 3.0)}
_cache = {}


def as_geometry(obj, h=None, window=None, graph_h=None, relax=True) -> Geometry:
    """Geometry for a domain, a solved DensityField or an existing Geometry.

    Non-exact domains are solved on demand (lattice h = 1/32 on the unit
    cell, annulus chains h = 1/64, rasters at their own spacing).  ``window``
    bounds the graph used for lattice distances.
    """
    if isinstance(obj, Geometry):
        return obj
    key = (id(obj), h, None if window is None else tuple(window), graph_h, relax)
    hit = _cache.get(key)
    if hit is not None and hit[0] is obj:
        return hit[1]
    if isinstance(obj, DensityField):
        fld = obj
        dom = obj.domain
        if fld.mode != "pde-grid":
            geo = Geometry(dom, lambda z, d=dom: density(d, z), exact=True, field=fld)
            _cache[key] = (obj, geo)
            return geo
    elif isinstance(obj, PlanarDomain) and obj.exact:
        geo = Geometry(obj, lambda z, d=obj: np.asarray(density(d, z)), exact=True)
        _cache[key] = (obj, geo)
        return geo
    else:
        dom = obj
        if isinstance(dom, Raster):
            fld = solve_density_pde(dom)
        else:
            fld = solve_density_pde(dom, h=h or _DEFAULT_H.get(dom.kind))
    dom = fld.domain
    if isinstance(dom, Raster):
        raster = dom
    else:
        win = window or _DEFAULT_WINDOW.get(dom.kind) or dom.default_window()
        raster = dom.rasterize(graph_h or fld.spacing, window=win)
    grid = GridGeometry(raster, fld, domain=dom)
    geo = Geometry(dom, fld, exact=False, grid=grid, field=fld, relax=relax)
    _cache[key] = (obj, geo)
    return geo


def model_domain(obj):
    """The PlanarDomain behind a domain, field or geometry."""
    if isinstance(obj, Geometry):
        return obj.domain
    if isinstance(obj, DensityField):
        return obj.domain
    return obj


def is_lattice_like(domain):
    return isinstance(domain, (LatticeComplement, ChainedAnnuli))
