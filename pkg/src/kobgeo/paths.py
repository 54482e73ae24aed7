"""Kobayashi lengths, distances, almost-geodesics and their certificates."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from kobgeo import constants
from kobgeo.domains import ConeParams, estimate_cone_params, verify_cone
from kobgeo.errors import ConeConditionError, PathError, QueryError
from kobgeo.oracle import Geometry, as_geometry, exact_geodesic

log = logging.getLogger(__name__)

__all__ = [
    "Path",
    "AlmostGeodesicCertificate",
    "path_length",
    "distance",
    "construct_almost_geodesic",
    "certify",
    "minimal_kappa",
    "minimal_lambda",
    "tame_quasi_geodesic",
    "radial_almost_geodesic",
    "TameResult",
    "RadialResult",
]

#: knot spacing in the parameter for closed-form geodesics
GEODESIC_DT = 2.5e-4


@dataclass(frozen=True, eq=False)
class Path:
    """Piecewise-linear curve through ``z`` at parameters ``t``."""

    t: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).ravel()
        z = np.asarray(self.z, dtype=complex).ravel()
        if len(t) != len(z) or len(t) == 0:
            raise PathError("knots and points must be non-empty and of equal length")
        if np.any(np.diff(t) <= 0):
            raise PathError("knots must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "z", z)

    @property
    def t0(self):
        return float(self.t[0])

    @property
    def t1(self):
        return float(self.t[-1])

    @property
    def span(self):
        return self.t1 - self.t0

    def __len__(self):
        return len(self.t)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if len(self.t) == 1:
            return np.full(s.shape, self.z[0])
        return np.interp(s, self.t, self.z.real) + 1j * np.interp(s, self.t, self.z.imag)

    def velocities(self):
        """Constant velocity on each segment."""
        return np.diff(self.z) / np.diff(self.t)

    def restrict(self, i, j):
        """Sub-path between knots i and j (inclusive)."""
        return Path(self.t[i:j + 1], self.z[i:j + 1])

    def reversed(self):
        return Path(self.t[-1] + self.t[0] - self.t[::-1], self.z[::-1])

    def shifted(self, dt):
        return Path(self.t + dt, self.z)

    def rows(self):
        return [(float(t), float(z.real), float(z.imag)) for t, z in zip(self.t, self.z)]

    @classmethod
    def constant(cls, z, t0=0.0, t1=None):
        if t1 is None or t1 == t0:
            return cls(np.array([t0]), np.array([complex(z)]))
        return cls(np.array([t0, t1]), np.array([complex(z)] * 2))

    @classmethod
    def concatenate(cls, paths):
        ts, zs = [paths[0].t], [paths[0].z]
        end = paths[0].t1
        for p in paths[1:]:
            if abs(p.z[0] - zs[-1][-1]) > 1e-12:
                raise PathError("paths do not join")
            ts.append(p.t[1:] - p.t0 + end)
            zs.append(p.z[1:])
            end = ts[-1][-1] if len(ts[-1]) else end
        return cls(np.concatenate(ts), np.concatenate(zs))


# --------------------------------------------------------------------------
# lengths


def _segment_samples(path, m):
    f = (np.arange(m) + 0.5) / m
    a, b = path.z[:-1], path.z[1:]
    return a[:, None] + (b - a)[:, None] * f[None, :]


def path_length(geom, path: Path, rtol=constants.LENGTH_RTOL, max_level=12):
    """Kobayashi length by composite midpoint quadrature, doubling the
    per-segment subdivision until successive totals agree to ``rtol``."""
    geo = as_geometry(geom)
    if len(path) < 2:
        return 0.0
    seg = np.abs(np.diff(path.z))
    if not np.any(seg > 0):
        return 0.0
    prev = None
    for level in range(max_level + 1):
        m = 2 ** level
        pts = _segment_samples(path, m)
        inside = np.asarray(geo.contains(pts), dtype=bool)
        if not np.all(inside):
            k = int(np.flatnonzero(~inside.all(axis=1))[0])
            raise PathError(f"segment {k} ({path.z[k]!r} -> {path.z[k + 1]!r}) leaves the domain")
        lam = geo.density(pts.ravel()).reshape(pts.shape)
        total = float(np.sum(lam.mean(axis=1) * seg))
        if prev is not None and abs(total - prev) <= rtol * max(abs(total), 1e-300):
            return total
        prev = total
    log.warning("path_length: quadrature did not reach rtol=%g", rtol)
    return total


def distance(geom, z, w):
    """Kobayashi distance; closed form on model domains, numeric otherwise."""
    geo = as_geometry(geom)
    z, w = complex(z), complex(w)
    for p in (z, w):
        if not geo.contains(np.array(p)):
            raise QueryError(f"point {p!r} outside {geo.domain.kind}")
    if z == w:
        return 0.0
    return geo.distance(z, w)


# --------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class AlmostGeodesicCertificate:
    lam: float
    kappa: float
    grid_n: int
    max_violation: float
    max_speed: float
    verdict: str
    error_bar: float = 0.0
    speed_tol: float = constants.SPEED_TOL
    worst_pair: Optional[tuple] = None
    notes: tuple = field(default=())

    @property
    def passed(self):
        return self.verdict == "pass"


def _grid_params(path, n):
    if len(path) == 1 or path.span == 0:
        return np.array([path.t0])
    return np.linspace(path.t0, path.t1, n)


def sampled_speed(geo: Geometry, path: Path):
    """Max of lambda |sigma'| at segment endpoints and midpoints."""
    if len(path) < 2:
        return 0.0
    v = np.abs(path.velocities())
    a, b = path.z[:-1], path.z[1:]
    s = np.stack([geo.density(a), geo.density(0.5 * (a + b)), geo.density(b)])
    return float(np.max(s * v[None, :]))


def _pair_tables(geo, path, n):
    ts = _grid_params(path, n)
    pts = path(ts)
    D, E = geo.distance_matrix(pts)
    dt = np.abs(ts[:, None] - ts[None, :])
    iu = np.triu_indices(len(ts), k=1)
    return ts, D[iu], E[iu], dt[iu], iu


def certify(geom, path: Path, lam=1.0, kappa=0.0, n=constants.CERT_GRID,
            speed_tol=constants.SPEED_TOL) -> AlmostGeodesicCertificate:
    """Check lam^-1|t-s| - kappa <= K(sigma(t), sigma(s)) <= lam|t-s| + kappa on
    an n x n parameter grid, and sampled speed <= lam (1 + speed_tol).

    With a numeric oracle every distance carries an error bar e: a pair
    passes only if it passes with K widened by e, fails only if it fails
    with K moved by e toward the band; anything else, or e > kappa/4, is
    inconclusive.
    """
    geo = as_geometry(geom)
    if lam < 1:
        raise ValueError("lam must be >= 1")
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    speed = sampled_speed(geo, path)
    speed_ok = speed <= lam * (1 + speed_tol)
    ts, D, E, dt, iu = _pair_tables(geo, path, n)
    if D.size == 0:
        verdict = "pass" if speed_ok else "fail"
        return AlmostGeodesicCertificate(lam, kappa, len(ts), 0.0, speed, verdict, 0.0, speed_tol)
    upper = lam * dt + kappa
    lower = dt / lam - kappa
    central = np.maximum(D - upper, lower - D)
    pessimistic = np.maximum(D + E - upper, lower - (D - E))
    optimistic = np.maximum(D - E - upper, lower - (D + E))
    err = float(np.max(E)) if E.size else 0.0
    worst = int(np.argmax(central))
    worst_pair = (float(ts[iu[0][worst]]), float(ts[iu[1][worst]]))
    notes = []
    if not speed_ok or np.max(optimistic) > 0:
        verdict = "fail"
    elif err > kappa / 4 and err > 0:
        verdict = "inconclusive"
        notes.append(f"distance error bar {err:.3g} exceeds kappa/4")
    elif np.max(pessimistic) <= 0:
        verdict = "pass"
    else:
        verdict = "inconclusive"
    return AlmostGeodesicCertificate(lam, kappa, len(ts), float(np.max(central)), speed, verdict,
                                     err, speed_tol, worst_pair, tuple(notes))


def minimal_kappa(geom, path, lam=1.0, n=constants.CERT_GRID):
    """Smallest kappa for which the two-sided inequality holds on the grid."""
    geo = as_geometry(geom)
    _, D, E, dt, _ = _pair_tables(geo, path, n)
    if D.size == 0:
        return 0.0
    return float(max(0.0, np.max(np.maximum(D + E - lam * dt, dt / lam - (D - E)))))


def minimal_lambda(geom, path, kappa=0.0, n=constants.CERT_GRID, speed_tol=constants.SPEED_TOL):
    """Smallest lam >= 1 passing the grid inequalities and the speed bound."""
    geo = as_geometry(geom)
    _, D, E, dt, _ = _pair_tables(geo, path, n)
    speed = sampled_speed(geo, path)
    cands = [1.0, speed / (1 + speed_tol)]
    if D.size:
        ok = dt > 0
        d, e, t = D[ok], E[ok], dt[ok]
        cands.append(float(np.max((d + e - kappa) / t)))
        with np.errstate(divide="ignore"):
            lo = np.where(d - e + kappa > 0, t / np.maximum(d - e + kappa, 1e-300), np.inf)
        cands.append(float(np.max(lo)))
    return max(cands)


# --------------------------------------------------------------------------
# construction


def _closed_form_path(geo, z, w, n):
    K, sigma = exact_geodesic(geo.domain, z, w)
    per = max(1, math.ceil(K / ((n - 1) * GEODESIC_DT)))
    m = (n - 1) * per
    t = np.linspace(0.0, K, m + 1)
    pts = sigma(t)
    pts[0], pts[-1] = z, w
    return Path(t, pts), K


def _arclength_path(geo, knots):
    cost = geo.segment_cost(knots[:-1], knots[1:])
    t = np.concatenate([[0.0], np.cumsum(cost)])
    keep = np.concatenate([[True], np.diff(t) > 0])
    return Path(t[keep], knots[keep])


def construct_almost_geodesic(geom, z, w, kappa, n=constants.CERT_GRID, certify_path=True):
    """(path, certificate) for a (1, kappa)-almost-geodesic from z to w.

    Closed-form domains use the exact geodesic through the uniformizing
    chart at unit speed; other domains use the relaxed grid shortest path
    parametrized by Kobayashi arclength.
    """
    geo = as_geometry(geom)
    z, w = complex(z), complex(w)
    if z == w:
        raise ValueError("endpoints must differ")
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    if geo.exact:
        path, _ = _closed_form_path(geo, z, w, n)
    else:
        res = geo.geodesic_knots(z, w)
        path = _arclength_path(geo, res.knots)
    cert = certify(geo, path, 1.0, kappa, n) if certify_path else None
    return path, cert


@dataclass(frozen=True)
class TameResult:
    path: Path
    hausdorff: float
    certificate: AlmostGeodesicCertificate
    pieces: int

    def __iter__(self):
        return iter((self.path, self.hausdorff))


def _pairwise_check(geo, t, z, lam0, kappa0, tol=1e-9):
    D, E = geo.distance_matrix(z)
    dt = np.abs(t[:, None] - t[None, :])
    bad = (D - E > lam0 * dt + kappa0 + tol) | (D + E < dt / lam0 - kappa0 - tol)
    np.fill_diagonal(bad, False)
    if bad.any():
        i, j = map(int, np.argwhere(bad)[0])
        raise PathError(f"samples {i} and {j} violate the ({lam0}, {kappa0}) quasi-geodesic inequality "
                        f"(K={D[i, j]:.6g}, |t-s|={dt[i, j]:.6g})")


def _hausdorff(geo, a, b, max_points=400):
    def thin(p):
        if len(p) <= max_points:
            return p
        return p[np.linspace(0, len(p) - 1, max_points).round().astype(int)]

    a, b = thin(np.asarray(a)), thin(np.asarray(b))
    if geo.exact:
        D = geo.distance_matrix(a, b)[0]
    else:
        D = geo.distance_matrix(a, b, relax=False)[0]
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def tame_quasi_geodesic(geom, samples, lam0, kappa0, n=constants.CERT_GRID) -> TameResult:
    """Join consecutive quasi-geodesic samples by (1, 1)-almost-geodesics.

    ``samples`` is a sequence of (t_i, z_i).  Returns the concatenated path
    (Kobayashi arclength parameter), the Hausdorff distance between the
    sample set and the path, and a certificate at lam0 with the smallest
    kappa that passes on the grid.
    """
    geo = as_geometry(geom)
    t = np.array([float(s[0]) for s in samples])
    z = np.array([complex(s[1]) for s in samples])
    if len(z) < 2:
        raise PathError("need at least two samples")
    _pairwise_check(geo, t, z, lam0, kappa0)
    pieces = []
    for a, b in zip(z[:-1], z[1:]):
        if a == b:
            continue
        p, _ = construct_almost_geodesic(geo, a, b, 1.0, n=n, certify_path=False)
        pieces.append(p)
    if not pieces:
        path = Path.constant(z[0])
    else:
        path = Path.concatenate(pieces)
    r = _hausdorff(geo, z, path.z)
    kap = minimal_kappa(geo, path, lam0, n)
    cert = certify(geo, path, lam0, kap * (1 + 1e-9) + 1e-12, n)
    return TameResult(path, r, cert, len(pieces))


@dataclass(frozen=True)
class RadialResult:
    path: Path
    certificate: AlmostGeodesicCertificate
    lam_hat: float
    bracket: tuple
    interior_cone: ConeParams
    exterior_cone: Optional[ConeParams]

    def __iter__(self):
        return iter((self.path, self.certificate))


def radial_almost_geodesic(geom, x, axis, reach, T, kappa=1e-6, n=constants.CERT_GRID,
                           dt=GEODESIC_DT):
    """sigma(t) = x + (reach/2) e^{-2t} axis on [0, T] with its certificate.

    The interior cone at x along ``axis`` with this reach must verify.  The
    certificate is issued at the smallest lam passing the grid; the bracket
    [2 a dt, (2/m) dt] uses m = min(sin(theta/2)) over the interior and
    exterior cones and a = m / (4 (2 - m)).
    """
    geo = as_geometry(geom)
    dom = geo.domain
    x = complex(x)
    axis = complex(axis) / abs(axis)
    try:
        cone = estimate_cone_params(dom, x, "interior", axis=axis, reaches=[reach])
    except ConeConditionError as exc:
        raise ConeConditionError(f"radial curve rejected: {exc}") from None
    if not verify_cone(dom, cone, n_radial=96, n_angular=101):
        raise ConeConditionError("radial curve rejected: dense cone re-verification failed")
    try:
        ext = estimate_cone_params(dom, x, "exterior")
    except ConeConditionError:
        ext = None
    m = math.sin(cone.aperture / 2)
    if ext is not None:
        m = min(m, math.sin(ext.aperture / 2))
    a = m / (4 * (2 - m))
    if T <= 0:
        path = Path.constant(x + reach / 2 * axis)
        cert = certify(geo, path, 1.0, kappa, n)
        return RadialResult(path, cert, 1.0, (2 * a, 2 / m), cone, ext)
    per = max(1, math.ceil(T / ((n - 1) * dt)))
    t = np.linspace(0.0, T, (n - 1) * per + 1)
    path = Path(t, x + (reach / 2) * np.exp(-2 * t) * axis)
    lam_hat = minimal_lambda(geo, path, kappa, n)
    cert = certify(geo, path, lam_hat * (1 + 1e-12), kappa, n)
    return RadialResult(path, cert, lam_hat, (2 * a, 2 / m), cone, ext)


def comparability_constant(geom, path: Path):
    """C with C^-1 |sigma'| <= lambda |sigma'| <= C |sigma'| along the knots."""
    geo = as_geometry(geom)
    lam = geo.density(path.z)
    return float(max(lam.max(), 1 / lam.min()))
