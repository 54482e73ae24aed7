"""Conformal density lambda with k(z; v) = lambda(z)|v| (curvature -4).

Closed forms cover the disk, half-plane and strip; the annulus and the
punctured disk are pulled back from the strip and the left half-plane under
exp.  Rasters (and the lattice / annulus-chain domains) are solved
numerically from  Delta u = 4 e^{2u},  u = log lambda.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from kobgeo import constants
from kobgeo.domains import (
    Annulus,
    ChainedAnnuli,
    ConeParams,
    Disk,
    HalfPlane,
    LatticeComplement,
    PlanarDomain,
    PuncturedDisk,
    Raster,
    Strip,
    estimate_cone_params,
)
from kobgeo.errors import ConeConditionError, DomainError, KobgeoError, NonConvergenceError, QueryError

log = logging.getLogger(__name__)

__all__ = [
    "DensityField",
    "DensityBounds",
    "density",
    "density_bounds",
    "kobayashi_metric",
    "solve_density_pde",
    "strip_density",
    "schwarz_pick_sandwich",
]


def _c(z):
    return np.asarray(z, dtype=complex)


def strip_density(z, width):
    """Density of {-width < Re z < 0}."""
    x = _c(z).real
    return (np.pi / (2 * width)) / np.sin(np.pi * (-x) / width)


def _closed_form(domain, z):
    if isinstance(domain, Disk):
        R = domain.radius
        return R / (R * R - np.abs(z - domain.center) ** 2)
    if isinstance(domain, HalfPlane):
        return 1.0 / (2.0 * z.imag)
    if isinstance(domain, Strip):
        return strip_density(z, domain.width)
    if isinstance(domain, Annulus):
        # pullback under the covering exp: Strip(s) -> A_s
        return strip_density(np.log(z), domain.s) / np.abs(z)
    if isinstance(domain, PuncturedDisk):
        r = np.abs(z)
        return 1.0 / (2.0 * r * np.log(1.0 / r))
    raise KobgeoError(f"no closed form for {domain.kind}")


def _mode_for(domain):
    if isinstance(domain, (Annulus, PuncturedDisk)):
        return "covering-pullback"
    if domain.exact:
        return "closed-form"
    return "pde-grid"


@dataclass(frozen=True, eq=False)
class DensityField:
    """Evaluable density.  For ``pde-grid`` mode ``u`` holds log(lambda) on
    the cells of ``mask`` (nan elsewhere); ``periodic`` fields repeat with
    period 1 in x and y."""

    domain: PlanarDomain
    mode: str
    u: Optional[np.ndarray] = None
    mask: Optional[np.ndarray] = None
    origin: complex = 0j
    spacing: float = 0.0
    periodic: bool = False
    residual: float = 0.0
    collar_width: float = 0.0
    iterations: int = 0
    history: tuple = field(default=())

    @classmethod
    def closed_form(cls, domain):
        if not domain.exact:
            raise KobgeoError(f"{domain.kind} has no closed-form density; solve the PDE")
        return cls(domain=domain, mode=_mode_for(domain))

    def _grid_coords(self, z):
        gx = (z.real - self.origin.real) / self.spacing
        gy = (z.imag - self.origin.imag) / self.spacing
        if self.periodic:
            n = self.u.shape[1]
            gx = np.mod(gx, n)
            gy = np.mod(gy, self.u.shape[0])
        return gx, gy

    def log_density(self, z):
        return np.log(self(_c(z)))

    def __call__(self, z):
        z = _c(z)
        if self.mode != "pde-grid":
            inside = self.domain.contains(z)
            if not np.all(inside):
                raise QueryError(f"point outside {self.domain.kind}")
            return _closed_form(self.domain, z)
        return self._grid_eval(z)

    def _grid_eval(self, z):
        inside = self.domain.contains(z)
        if not np.all(inside):
            bad = np.atleast_1d(z)[~np.atleast_1d(inside)][0]
            raise QueryError(f"point {complex(bad)!r} outside {self.domain.kind}")
        d = self.domain._clearance(z)
        out = np.empty(z.shape)
        collar = d < self.collar_width
        out[collar] = 1.0 / (2.0 * d[collar])
        rest = ~collar
        if np.any(rest):
            out[rest] = np.exp(self._interp(z[rest]))
        return out

    def _interp(self, z):
        u = self.u
        ny, nx = u.shape
        gx, gy = self._grid_coords(z)
        j0 = np.floor(gx).astype(np.int64)
        i0 = np.floor(gy).astype(np.int64)
        fx = gx - j0
        fy = gy - i0
        if self.periodic:
            idx = [(i0 % ny, j0 % nx), (i0 % ny, (j0 + 1) % nx),
                   ((i0 + 1) % ny, j0 % nx), ((i0 + 1) % ny, (j0 + 1) % nx)]
        else:
            ci = lambda a: np.clip(a, 0, ny - 1)  # noqa: E731
            cj = lambda a: np.clip(a, 0, nx - 1)  # noqa: E731
            idx = [(ci(i0), cj(j0)), (ci(i0), cj(j0 + 1)), (ci(i0 + 1), cj(j0)), (ci(i0 + 1), cj(j0 + 1))]
        w = [(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy]
        vals = np.stack([u[i, j] for i, j in idx])
        wts = np.stack(w)
        good = np.isfinite(vals)
        wts = np.where(good, wts, 0.0)
        tot = wts.sum(axis=0)
        est = np.where(good, vals, 0.0)
        res = (wts * est).sum(axis=0) / np.where(tot > 0, tot, 1.0)
        if np.any(tot <= 0):
            # all four corners outside the mask: nearest finite cell
            bad = tot <= 0
            ii = np.rint(gy[bad]).astype(np.int64)
            jj = np.rint(gx[bad]).astype(np.int64)
            if self.periodic:
                ii, jj = ii % ny, jj % nx
            else:
                ii, jj = np.clip(ii, 0, ny - 1), np.clip(jj, 0, nx - 1)
            res[bad] = u[ii, jj]
        return res

    def grid_points(self):
        """Cell centres and densities of the solved grid (pde-grid only)."""
        if self.mode != "pde-grid":
            raise KobgeoError("grid_points needs a pde-grid field")
        ny, nx = self.u.shape
        xs = self.origin.real + self.spacing * np.arange(nx)
        ys = self.origin.imag + self.spacing * np.arange(ny)
        c = xs[None, :] + 1j * ys[:, None]
        return c[self.mask], np.exp(self.u[self.mask])


def density(domain, z):
    """lambda_Omega(z).  ``domain`` may be a PlanarDomain or a solved DensityField."""
    if isinstance(domain, DensityField):
        out = domain(z)
    elif domain.exact:
        z = _c(z)
        if not np.all(domain.contains(z)):
            raise QueryError(f"point outside {domain.kind}")
        out = _closed_form(domain, z)
    else:
        raise KobgeoError(f"{domain.kind}: pde-grid density not solved (pass a DensityField)")
    return float(out) if np.ndim(out) == 0 else out


def kobayashi_metric(domain, z, v):
    """k(z; v) = lambda(z)|v|."""
    lam = density(domain, z)
    out = lam * np.abs(_c(v))
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# bounds


@dataclass(frozen=True)
class DensityBounds:
    lower: float
    upper: float
    lower_provenance: str
    upper_provenance: str
    c1: float = 0.0
    cone: Optional[ConeParams] = None

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("lower bound exceeds upper bound")


def exterior_cone_constant(cone: ConeParams, delta):
    """c1 with B(w, c1 delta) in C \\ Omega, w = x + min(delta, r0/2) axis."""
    t = min(delta, cone.reach / 2)
    return t * math.sin(min(cone.aperture / 2, math.pi / 2)) / delta


def density_bounds(domain, z, cone: Optional[ConeParams] = None, **cone_kwargs) -> DensityBounds:
    """Two-sided bounds: 1/delta from the inscribed disk, and the exterior-cone
    lower bound c1 / (4 (2 - c1) delta) at the nearest boundary point."""
    base = domain.domain if isinstance(domain, DensityField) else domain
    z = complex(z)
    delta = float(base.clearance(z))
    upper = 1.0 / delta
    if cone is None:
        x = complex(base.nearest_boundary_point(z))
        try:
            cone = estimate_cone_params(base, x, "exterior", min_reach=2 * delta, **cone_kwargs)
        except ConeConditionError:
            try:
                cone = estimate_cone_params(base, x, "exterior", **cone_kwargs)
            except ConeConditionError as exc:
                log.info("no exterior cone at %r: %s", x, exc)
                return DensityBounds(0.0, upper, f"no exterior cone ({exc})", "inscribed disk B(z, delta)")
    c1 = exterior_cone_constant(cone, delta)
    lower = c1 / (4 * (2 - c1) * delta)
    return DensityBounds(lower, upper, f"exterior cone, c1={c1:.6f}", "inscribed disk B(z, delta)",
                         c1=c1, cone=cone)


def schwarz_pick_sandwich(domain, z):
    """(lower, upper) from an enclosing disk complement and the inscribed disk.

    For the lattice and annulus-chain domains the nearest hole of radius r at
    centre n gives  Omega in C \\ closed B(n, r), whose density at distance rho
    is 1 / (2 rho log(rho / r)).
    """
    z = complex(z)
    delta = float(domain.clearance(z))
    upper = 1.0 / delta
    if isinstance(domain, LatticeComplement):
        n = complex(domain.nearest_hole(z))
        r = domain.r
    elif isinstance(domain, ChainedAnnuli):
        k = int(np.argmin([abs(z - c) for c in domain.centers]))
        n = complex(domain.centers[k])
        r = math.exp(-domain.moduli[k])
    else:
        return (0.0, upper)
    rho = abs(z - n)
    return (1.0 / (2 * rho * math.log(rho / r)), upper)


# --------------------------------------------------------------------------
# PDE


def _periodic_cell_raster(domain: LatticeComplement, h):
    n = int(round(1.0 / h))
    if abs(n * h - 1.0) > 1e-12:
        raise DomainError("h", "periodic lattice solve needs 1/h to be an integer")
    return domain.rasterize(h, window=(0.0, 1.0, 0.0, 1.0), offset=0.0)


def solve_density_pde(domain, h=None, tolerance=constants.PDE_TOLERANCE, window=None,
                      max_iter=200, collar_cells=constants.COLLAR_CELLS) -> DensityField:
    """Damped Newton solve of the discrete Liouville problem.

    Unknowns are mask cells with clearance >= collar (3h); collar cells carry
    Dirichlet data u = -log(2 delta).  The residual is the 5-point stencil
    form  sum(u_nb) - 4u - 4h^2 e^{2u}  and ``tolerance`` bounds its sup-norm.
    LatticeComplement domains are solved on one periodic unit cell.
    """
    if tolerance < 1e-10:
        raise DomainError("tolerance", "tolerance must be >= 1e-10")
    periodic = False
    if isinstance(domain, Raster):
        raster = domain
        target = domain
    elif isinstance(domain, LatticeComplement):
        if h is None:
            raise DomainError("h", "spacing required for the lattice solve")
        raster = _periodic_cell_raster(domain, h)
        target = domain
        periodic = True
    else:
        if h is None:
            raise DomainError("h", "spacing required to rasterize a model domain")
        raster = domain.rasterize(h, window=window)
        target = raster
    h = raster.spacing
    mask = raster.mask
    d = raster.cell_clearance() if not periodic else _cell_clearance_model(domain, raster)
    collar_w = collar_cells * h
    collar = mask & (d < collar_w)
    unknown = mask & ~collar
    if not unknown.any() or d.max() < 2 * collar_w:
        raise DomainError("mask", "raster interior must be at least 6 cells thick somewhere")

    ny, nx = mask.shape
    idx = -np.ones(mask.shape, dtype=np.int64)
    cells = np.argwhere(unknown)
    idx[unknown] = np.arange(len(cells))
    n = len(cells)
    ui, uj = cells[:, 0], cells[:, 1]

    dirichlet = np.full(mask.shape, np.nan)
    dirichlet[collar] = -np.log(2 * d[collar])

    rows, cols = [], []
    bvec = np.zeros(n)
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        ni, nj = ui + di, uj + dj
        if periodic:
            ni, nj = ni % ny, nj % nx
        else:
            inb = (ni >= 0) & (ni < ny) & (nj >= 0) & (nj < nx)
            if not np.all(inb):
                raise DomainError("mask", "unknown cell on the raster edge; enlarge the window")
        k = idx[ni, nj]
        is_unknown = k >= 0
        rows.append(np.flatnonzero(is_unknown))
        cols.append(k[is_unknown])
        bd = ~is_unknown
        vals = dirichlet[ni[bd], nj[bd]]
        if not np.all(np.isfinite(vals)):
            raise DomainError("mask", "unknown cell adjacent to an exterior cell")
        np.add.at(bvec, np.flatnonzero(bd), vals)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    A = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    A = A - 4.0 * sp.identity(n, format="csr")
    h2 = h * h

    def residual(u):
        return A @ u + bvec - 4.0 * h2 * np.exp(2 * u)

    u = -np.log(2 * d[unknown])
    F = residual(u)
    res = float(np.max(np.abs(F)))
    history = [res]
    it = 0
    while res > tolerance:
        if it >= max_iter:
            raise NonConvergenceError("Newton iteration limit reached", res)
        J = A - sp.diags(8.0 * h2 * np.exp(2 * u))
        du = spla.spsolve(J.tocsc(), -F)
        step = 1.0
        while True:
            u_new = u + step * du
            F_new = residual(u_new)
            res_new = float(np.max(np.abs(F_new)))
            if res_new < res or step < 1e-6:
                break
            step *= 0.5
        u, F = u_new, F_new
        it += 1
        history.append(res_new)
        if res_new >= res and step < 1e-6:
            raise NonConvergenceError("Newton damping failed to reduce the residual", res_new)
        res = res_new
        window_ = constants.PDE_STAGNATION_WINDOW
        if len(history) > window_ and history[-1] > history[-1 - window_] / 10:
            raise NonConvergenceError("Newton stagnation", res)
        log.debug("newton it=%d res=%.3e step=%g", it, res, step)

    grid = np.full(mask.shape, np.nan)
    grid[collar] = dirichlet[collar]
    grid[unknown] = u
    return DensityField(domain=target, mode="pde-grid", u=grid, mask=mask.copy(),
                        origin=raster.origin, spacing=h, periodic=periodic, residual=res,
                        collar_width=collar_w, iterations=it, history=tuple(history))


def _cell_clearance_model(domain, raster):
    c = raster.centers()
    out = np.zeros(raster.mask.shape)
    out[raster.mask] = domain._clearance(c[raster.mask])
    return out
