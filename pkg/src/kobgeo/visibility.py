"""Goldilocks diagnostics and empirical visibility experiments.

M(r) is the largest 1/lambda over sampled points of the neighbourhood U
within distance r of the boundary.  Condition (1) is judged by a power-law
fit of M, condition (2) by a logarithmic fit of K(z0, z) along the
interior-cone axis.  Both are finite-sample surrogates; the raw tables are
always returned.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from kobgeo import constants
from kobgeo.domains import PuncturedDisk, interior_cone, inward_normal
from kobgeo.errors import ConeConditionError, QueryError
from kobgeo.oracle import as_geometry
from kobgeo.parallel import pmap
from kobgeo.paths import construct_almost_geodesic

log = logging.getLogger(__name__)

__all__ = ["GoldilocksReport", "m_function", "goldilocks_report", "visibility_experiment",
           "derivative_bound_violations", "VisibilityReport"]

ALPHA_MIN = 0.1
FIT_RESIDUAL_MAX = 0.2
STABILITY_FACTOR = 1.05


def _boundary_in_ball(dom, center, radius, n=256):
    win = (center.real - radius, center.real + radius, center.imag - radius, center.imag + radius)
    pts = np.asarray(dom.boundary_points(n, window=win), dtype=complex)
    return pts[np.abs(pts - center) < radius]


def collar_samples(geo, center, radius, r_values, n_angles=32, n_radii=40, n_grid=64):
    """Points of Omega within the ball U used to estimate M."""
    dom = geo.domain
    center = complex(center)
    bpts = _boundary_in_ball(dom, center, radius)
    phi = np.exp(2j * np.pi * np.arange(n_angles) / n_angles)
    rho = radius * np.geomspace(1e-4, 1.0, n_radii)
    rvals = np.asarray([r for r in r_values if r > 0], dtype=float)
    rho = np.unique(np.concatenate([rho, rvals]))
    samples = [(b + rho[:, None] * phi[None, :]).ravel() for b in bpts]
    samples += _normal_rays(dom, bpts, rho, center, radius)
    xs = np.linspace(center.real - radius, center.real + radius, n_grid)
    ys = np.linspace(center.imag - radius, center.imag + radius, n_grid)
    samples.append((xs[None, :] + 1j * ys[:, None]).ravel())
    z = np.concatenate(samples) if samples else np.zeros(0, complex)
    z = z[np.abs(z - center) < radius]
    z = z[np.asarray(dom.contains(z), dtype=bool)]
    return z, bpts


def _normal_rays(dom, bpts, rho, center, radius):
    """Points at clearance exactly rho along the inward normals, so the collar
    maxima are not undersampled by the polar fan.  Each ray also gets a point
    just inside the rim of U, where the supremum over U may sit."""
    out = []
    for b in bpts:
        try:
            nu = inward_normal(dom, b)
        except ConeConditionError:
            continue
        p = b + 1e-3 * nu
        if not dom.contains(np.array(p)):
            continue
        b2 = complex(dom.nearest_boundary_point(np.array(p)))
        if abs(p - b2) == 0:
            continue
        nu = (p - b2) / abs(p - b2)
        out.append(b2 + rho * nu)
        # exit parameter of the ray from the ball |z - center| < radius
        q = b2 - center
        bq = (q * nu.conjugate()).real
        disc = bq * bq - (abs(q) ** 2 - radius * radius)
        if disc > 0:
            t = -bq + math.sqrt(disc)
            if t > 0:
                out.append(np.array([b2 + t * (1 - 1e-12) * nu]))
    return out


@dataclass
class MTable:
    r: np.ndarray
    M: np.ndarray
    counts: np.ndarray
    notes: list = field(default_factory=list)

    def rows(self):
        return [(float(a), float(b)) for a, b in zip(self.r, self.M)]

    def at(self, delta):
        """M at the smallest tabulated r >= delta (nan beyond the table)."""
        k = np.searchsorted(self.r, delta, side="left")
        k = np.asarray(k)
        out = np.where(k < len(self.r), self.M[np.minimum(k, len(self.r) - 1)], np.nan)
        return out


def m_function(geom, U, r_values, **sample_kw) -> MTable:
    """M(r) = max of 1/lambda over sampled z in U with clearance <= r."""
    geo = as_geometry(geom)
    center, radius = complex(U[0]), float(U[1])
    r_values = np.sort(np.asarray(r_values, dtype=float))
    z, bpts = collar_samples(geo, center, radius, r_values, **sample_kw)
    notes = []
    if bpts.size == 0:
        notes.append("U contains no sampled boundary point")
    if z.size:
        d = np.asarray(geo.domain._clearance(z), dtype=float)
        inv = 1.0 / np.asarray(geo.density(z), dtype=float)
        order = np.argsort(d)
        d, inv = d[order], inv[order]
        runmax = np.maximum.accumulate(inv)
    M = np.zeros(len(r_values))
    counts = np.zeros(len(r_values), dtype=int)
    for i, r in enumerate(r_values):
        if r <= 0 or z.size == 0:
            continue
        k = int(np.searchsorted(d, r, side="right"))
        counts[i] = k
        if k == 0:
            notes.append(f"no samples with clearance <= {r:g}")
            continue
        M[i] = runmax[k - 1]
    return MTable(r_values, M, counts, notes)


@dataclass
class GoldilocksReport:
    x: complex
    U: tuple
    z0: complex
    m_table: MTable
    alpha_M: Optional[float]
    C_M: Optional[float]
    fit_residual: Optional[float]
    cone: object
    deltas: np.ndarray
    distances: np.ndarray
    alpha: Optional[float]
    C: Optional[float]
    tail_slope: Optional[float]
    verdict_1: str
    verdict_2: str
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return self.verdict_1 == "pass" and self.verdict_2 == "pass"


def fit_power_law(r, M):
    ok = (r > 0) & (M > 0)
    if ok.sum() < 3:
        return None, None, None
    lr, lm = np.log(r[ok]), np.log(M[ok])
    alpha, logc = np.polyfit(lr, lm, 1)
    fit = np.exp(logc + alpha * lr)
    resid = float(np.sqrt(np.mean((fit / M[ok] - 1) ** 2)))
    return float(alpha), float(math.exp(logc)), resid


def fit_log_growth(deltas, K):
    """alpha from least squares of K on log(1/delta); C = max residual."""
    L = np.log(1.0 / deltas)
    alpha, _ = np.polyfit(L, K, 1)
    C = float(np.max(K - alpha * L))
    third = max(3, len(L) // 3)
    tail_slope = float(np.polyfit(L[-third:], K[-third:], 1)[0])
    return float(alpha), C, tail_slope


def goldilocks_report(geom, x, U=None, z0=None, r_values=None, depth=14, min_delta=None) -> GoldilocksReport:
    """Both Goldilocks diagnostics at the boundary point x."""
    geo = as_geometry(geom)
    dom = geo.domain
    x = complex(x)
    if U is None:
        U = (x, 0.25)
    U = (complex(U[0]), float(U[1]))
    notes = []
    if r_values is None:
        r_values = U[1] * np.geomspace(2.0 ** -10, 0.5, 16)
    if min_delta is None:
        # numeric distances are resolved only a few cells away from the boundary
        min_delta = 2 * geo.grid.h if geo.grid is not None else 0.0
    r_values = np.asarray(r_values, dtype=float)
    table = m_function(geo, U, r_values)
    alpha_M, C_M, resid = fit_power_law(table.r, table.M)
    isolated = isinstance(dom, PuncturedDisk) and abs(x) < 1e-12
    if isolated:
        notes.append("isolated boundary point: fits reported without a verdict")
    try:
        cone = interior_cone(dom, x, reach_max=U[1])
    except ConeConditionError as exc:
        cone = None
        notes.append(f"interior cone: {exc}")
    deltas = np.zeros(0)
    K = np.zeros(0)
    alpha = C = tail = None
    if cone is not None:
        if z0 is None:
            z0 = x + cone.reach / 2 * cone.axis
        z0 = complex(z0)
        rho = cone.reach / 2 * 2.0 ** (-0.5 * np.arange(2 * depth + 1))
        pts = x + rho * cone.axis
        d = np.asarray(dom._clearance(pts), dtype=float)
        keep = d > max(min_delta, 0)
        pts, d = pts[keep], d[keep]
        if len(pts) >= 4:
            if geo.exact:
                K = np.asarray(geo.distance(np.full(len(pts), z0), pts), dtype=float)
            else:
                K = np.array(pmap(lambda p: geo.distance(z0, p), pts), dtype=float)
            deltas = d
            alpha, C, tail = fit_log_growth(deltas, K)
        else:
            notes.append("too few approach points for the distance fit")
    if isolated:
        v1 = v2 = "inconclusive"
    else:
        v1 = "pass" if (alpha_M is not None and alpha_M >= ALPHA_MIN and resid <= FIT_RESIDUAL_MAX) else "fail"
        if alpha_M is None:
            v1 = "inconclusive"
        if alpha is None:
            v2 = "inconclusive"
        else:
            v2 = "pass" if (alpha > 0 and tail <= 1.25 * alpha + 0.05) else "fail"
    return GoldilocksReport(x, U, z0 if z0 is not None else complex("nan"), table, alpha_M, C_M, resid,
                            cone, deltas, K, alpha, C, tail, v1, v2, notes)


def derivative_bound_violations(geom, path, lam, table: MTable, tol=1e-6, U=None):
    """Count knots where |sigma'| > lam * M(delta(sigma)) + tol.

    Only knots inside U and with clearance within the table range count.
    """
    geo = as_geometry(geom)
    v = np.abs(path.velocities())
    z = 0.5 * (path.z[1:] + path.z[:-1])
    d = np.asarray(geo.domain._clearance(z), dtype=float)
    M = table.at(d)
    sel = np.isfinite(M)
    if U is not None:
        sel &= np.abs(z - complex(U[0])) < float(U[1])
    excess = v[sel] - (lam * M[sel] + tol)
    return int(np.sum(excess > 0)), float(np.max(excess)) if excess.size else -np.inf


# --------------------------------------------------------------------------


@dataclass
class VisibilityReport:
    xi: complex
    eta: complex
    o: complex
    m: np.ndarray
    sup: float
    stable: bool
    verdict: str
    certificates: list
    paths: list = field(default_factory=list)


def _stable(m, factor=STABILITY_FACTOR, atol=1e-9):
    """Last-third max <= factor * middle-third max + atol."""
    n = len(m)
    if n < 3:
        return True
    third = n // 3
    middle = m[third:2 * third]
    last = m[2 * third:]
    return float(np.max(last)) <= factor * float(np.max(middle)) + atol


def _approach(dom, x, n, radius):
    try:
        cone = interior_cone(dom, x, reach_max=radius)
        axis, reach = cone.axis, cone.reach
    except ConeConditionError:
        axis = -(complex(dom.nearest_boundary_point(x)) - x)
        if abs(axis) == 0:
            raise
        axis, reach = axis / abs(axis), radius
    rho = min(reach, radius) / 2 * np.geomspace(1.0, 2.0 ** -(n - 1) * 1.0, n)
    return x + rho * axis


def visibility_experiment(geom, xi, eta, radius=0.25, kappa=0.05, n=12, o=None, keep_paths=False,
                          cert_n=constants.CERT_GRID) -> VisibilityReport:
    """m_i = min over the knots of sigma_i of K(o, .) for almost-geodesics
    sigma_i joining z_i -> xi and w_i -> eta."""
    geo = as_geometry(geom)
    dom = geo.domain
    xi, eta = complex(xi), complex(eta)
    if xi == eta:
        raise ValueError("targets must differ")
    if abs(xi - eta) <= 2 * radius:
        raise ValueError("target neighbourhoods overlap")
    zs = _approach(dom, xi, n, radius)
    ws = _approach(dom, eta, n, radius)
    if o is None:
        o = 0.5 * (zs[0] + ws[0])
        if not dom.contains(np.array(o)):
            o = zs[0]
    o = complex(o)
    if not dom.contains(np.array(o)):
        raise QueryError("base point outside the domain")

    def one(pair):
        z, w = pair
        path, cert = construct_almost_geodesic(geo, z, w, kappa, n=cert_n)
        pts = path.z
        if len(pts) > 2000:
            pts = pts[np.linspace(0, len(pts) - 1, 2000).round().astype(int)]
        if geo.exact:
            d = geo.distance(np.full(len(pts), o), pts)
        else:
            d = geo.distance_matrix(np.array([o]), pts, relax=False)[0][0]
        return float(np.min(d)), cert, path

    out = pmap(one, list(zip(zs, ws)))
    m = np.array([r[0] for r in out])
    # distances along kappa-almost-geodesics are only meaningful to kappa
    stable = _stable(m, atol=kappa)
    certs = [r[1] for r in out]
    verdict = "visibility-consistent" if stable else "escaping"
    if any(c.verdict == "fail" for c in certs):
        verdict += " (some almost-geodesics failed certification)"
    return VisibilityReport(xi, eta, o, m, float(m.max()), stable, verdict, certs,
                            [r[2] for r in out] if keep_paths else [])
