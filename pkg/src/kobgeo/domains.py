"""Planar hyperbolic domains: membership, boundary clearance, cone geometry.

Model domains answer membership and clearance by formula.  A ``Raster`` is a
boolean cell mask; its boundary is the set of interior cells having an
exterior 8-neighbour and its clearance is the Euclidean distance transform of
the mask (error at most one cell).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from kobgeo import constants
from kobgeo.errors import ConeConditionError, DomainError, QueryError

__all__ = [
    "PlanarDomain",
    "Disk",
    "HalfPlane",
    "Strip",
    "Annulus",
    "PuncturedDisk",
    "LatticeComplement",
    "ChainedAnnuli",
    "Raster",
    "ConeParams",
    "build_domain",
    "clearance",
    "estimate_cone_params",
    "verify_cone",
    "cone_samples",
    "parse_complex",
    "inward_normal",
    "interior_cone",
]


def parse_complex(value) -> complex:
    """Accept ``1.5``, ``[re, im]``, ``{"re":..,"im":..}`` or ``"0.5+0.5j"``."""
    if isinstance(value, (int, float, complex, np.number)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, dict) and set(value) <= {"re", "im"}:
        return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
    if isinstance(value, str):
        return complex(value.replace(" ", "").replace("i", "j"))
    raise ValueError(f"cannot interpret {value!r} as a complex number")


def _c(z):
    return np.asarray(z, dtype=complex)


class PlanarDomain:
    """Common interface of every domain kind.

    Subclasses implement ``contains`` and ``_clearance`` (both vectorized
    over complex arrays) and describe a default raster window.
    """

    kind = "abstract"
    #: closed-form density and distance available
    exact = False
    #: clearance computed by formula rather than from a raster
    exact_clearance = True

    def contains(self, z):
        raise NotImplementedError

    def _clearance(self, z):
        raise NotImplementedError

    def clearance(self, z):
        z = _c(z)
        inside = self.contains(z)
        if not np.all(inside):
            bad = np.atleast_1d(z)[~np.atleast_1d(inside)][0]
            raise QueryError(f"point {complex(bad)!r} is not in {self.kind}")
        return self._clearance(z)

    def default_window(self):
        """(xmin, xmax, ymin, ymax) used when rasterizing without a window."""
        raise DomainError("window", f"{self.kind} is unbounded; pass a raster window")

    def boundary_points(self, n, window=None):
        raise NotImplementedError

    def nearest_boundary_point(self, z):
        """A boundary point at distance clearance(z) from ``z``."""
        raise NotImplementedError

    def to_spec(self) -> dict:
        raise NotImplementedError

    def rasterize(self, h, window=None, offset=0.5) -> "Raster":
        """Sample membership at cell centres ``xmin + (j + offset) h``."""
        if not h > 0:
            raise DomainError("h", "raster spacing must be positive")
        xmin, xmax, ymin, ymax = window if window is not None else self.default_window()
        nx = int(math.floor((xmax - xmin) / h + 1e-9))
        ny = int(math.floor((ymax - ymin) / h + 1e-9))
        origin = complex(xmin + offset * h, ymin + offset * h)
        xs = origin.real + h * np.arange(nx)
        ys = origin.imag + h * np.arange(ny)
        centers = xs[None, :] + 1j * ys[:, None]
        mask = np.asarray(self.contains(centers), dtype=bool)
        return Raster(mask=mask, origin=origin, spacing=float(h), source=self)

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.to_spec().items() if k != "kind")
        return f"{type(self).__name__}({args})"


@dataclass(frozen=True, repr=False)
class Disk(PlanarDomain):
    center: complex = 0j
    radius: float = 1.0

    kind = "disk"
    exact = True

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if not self.radius > 0:
            raise DomainError("radius", "disk radius must be positive")

    def contains(self, z):
        return np.abs(_c(z) - self.center) < self.radius

    def _clearance(self, z):
        return self.radius - np.abs(_c(z) - self.center)

    def nearest_boundary_point(self, z):
        w = _c(z) - self.center
        u = np.where(np.abs(w) > 0, w / np.where(np.abs(w) > 0, np.abs(w), 1), 1.0)
        return self.center + self.radius * u

    def default_window(self):
        m = 0.05 * self.radius
        c, r = self.center, self.radius + m
        return (c.real - r, c.real + r, c.imag - r, c.imag + r)

    def boundary_points(self, n, window=None):
        phi = 2 * np.pi * np.arange(n) / n
        return self.center + self.radius * np.exp(1j * phi)

    def to_spec(self):
        return {"kind": "disk", "center": [self.center.real, self.center.imag], "radius": self.radius}


@dataclass(frozen=True, repr=False)
class HalfPlane(PlanarDomain):
    """The upper half-plane {Im z > 0}."""

    kind = "half_plane"
    exact = True

    def contains(self, z):
        return _c(z).imag > 0

    def _clearance(self, z):
        return _c(z).imag

    def nearest_boundary_point(self, z):
        return _c(z).real + 0j

    def boundary_points(self, n, window=None):
        xmin, xmax = (window[0], window[1]) if window is not None else (-1.0, 1.0)
        return np.linspace(xmin, xmax, n).astype(complex)

    def to_spec(self):
        return {"kind": "half_plane"}


@dataclass(frozen=True, repr=False)
class Strip(PlanarDomain):
    """The vertical strip {-width < Re z < 0}."""

    width: float = 1.0

    kind = "strip"
    exact = True

    def __post_init__(self):
        if not self.width > 0:
            raise DomainError("width", "strip width must be positive")

    def contains(self, z):
        x = _c(z).real
        return (x > -self.width) & (x < 0)

    def _clearance(self, z):
        x = _c(z).real
        return np.minimum(-x, x + self.width)

    def nearest_boundary_point(self, z):
        z = _c(z)
        wall = np.where(-z.real <= z.real + self.width, 0.0, -self.width)
        return wall + 1j * z.imag

    def boundary_points(self, n, window=None):
        ymin, ymax = (window[2], window[3]) if window is not None else (-1.0, 1.0)
        ys = np.linspace(ymin, ymax, n - n // 2)
        return np.concatenate([1j * ys, -self.width + 1j * np.linspace(ymin, ymax, n // 2)])

    def to_spec(self):
        return {"kind": "strip", "width": self.width}


@dataclass(frozen=True, repr=False)
class Annulus(PlanarDomain):
    """A_s = {e^{-s} < |z| < 1}."""

    s: float = 1.0

    kind = "annulus"
    exact = True

    def __post_init__(self):
        if not self.s > 0 or not math.isfinite(self.s):
            raise DomainError("s", "annulus modulus must be a positive real")

    @property
    def inner_radius(self):
        return math.exp(-self.s)

    @property
    def core_radius(self):
        return math.exp(-self.s / 2)

    def contains(self, z):
        r = np.abs(_c(z))
        return (r > self.inner_radius) & (r < 1.0)

    def _clearance(self, z):
        r = np.abs(_c(z))
        return np.minimum(1.0 - r, r - self.inner_radius)

    def nearest_boundary_point(self, z):
        z = _c(z)
        r = np.abs(z)
        rad = np.where(1.0 - r <= r - self.inner_radius, 1.0, self.inner_radius)
        return rad * z / r

    def default_window(self):
        return (-1.05, 1.05, -1.05, 1.05)

    def boundary_points(self, n, window=None):
        m = n // 2
        outer = np.exp(2j * np.pi * np.arange(n - m) / (n - m))
        inner = self.inner_radius * np.exp(2j * np.pi * np.arange(m) / max(m, 1))
        return np.concatenate([outer, inner])

    def to_spec(self):
        return {"kind": "annulus", "s": self.s}


@dataclass(frozen=True, repr=False)
class PuncturedDisk(PlanarDomain):
    """The unit disk minus the origin (an isolated boundary point)."""

    kind = "punctured_disk"
    exact = True

    def contains(self, z):
        r = np.abs(_c(z))
        return (r > 0) & (r < 1)

    def _clearance(self, z):
        r = np.abs(_c(z))
        return np.minimum(r, 1 - r)

    def nearest_boundary_point(self, z):
        z = _c(z)
        r = np.abs(z)
        return np.where(r <= 1 - r, 0j, z / r)

    def default_window(self):
        return (-1.05, 1.05, -1.05, 1.05)

    def boundary_points(self, n, window=None):
        return np.concatenate([[0j], np.exp(2j * np.pi * np.arange(n - 1) / (n - 1))])

    def to_spec(self):
        return {"kind": "punctured_disk"}


@dataclass(frozen=True, repr=False)
class LatticeComplement(PlanarDomain):
    """C minus the closed disks of radius ``r`` about the Gaussian integers."""

    r: float = 0.25

    kind = "lattice_complement"

    def __post_init__(self):
        if not 0 < self.r < 0.5:
            raise DomainError("r", "hole radius must lie in (0, 1/2)")

    def _hole_distance(self, z):
        z = _c(z)
        nearest = np.round(z.real) + 1j * np.round(z.imag)
        return np.abs(z - nearest)

    def contains(self, z):
        return self._hole_distance(z) > self.r

    def _clearance(self, z):
        return self._hole_distance(z) - self.r

    def nearest_hole(self, z):
        z = _c(z)
        return np.round(z.real) + 1j * np.round(z.imag)

    def nearest_boundary_point(self, z):
        z = _c(z)
        n = self.nearest_hole(z)
        return n + self.r * (z - n) / np.abs(z - n)

    def default_window(self):
        return (-2.0, 2.0, -2.0, 2.0)

    def end_window(self):
        return (-40.0, 40.0, -40.0, 40.0)

    def boundary_points(self, n, window=None):
        xmin, xmax, ymin, ymax = window if window is not None else (-0.5, 0.5, -0.5, 0.5)
        centers = [
            complex(m, k)
            for m in range(math.ceil(xmin), math.floor(xmax) + 1)
            for k in range(math.ceil(ymin), math.floor(ymax) + 1)
        ]
        if not centers:
            centers = [complex(round((xmin + xmax) / 2), round((ymin + ymax) / 2))]
        per = max(4, n // len(centers))
        ring = self.r * np.exp(2j * np.pi * np.arange(per) / per)
        return np.concatenate([c + ring for c in centers])

    def to_spec(self):
        return {"kind": "lattice_complement", "r": self.r}


@dataclass(frozen=True, repr=False)
class ChainedAnnuli(PlanarDomain):
    """Finite realization of the annulus chain: annuli e^{-s_n} < |z - z_n| < 1
    with z_n = 3(n - 1), each joined to the real axis by the slab
    {e^{-s_n} < |z - z_n| < 2, |Im z| < 1/n}.

    Only the listed moduli are realized.  Clearance is taken from an internal
    raster at spacing ``clearance_h``.
    """

    moduli: tuple = (0.5,)
    clearance_h: float = 1 / 128

    kind = "chained_annuli"
    exact_clearance = False

    def __post_init__(self):
        mods = tuple(float(s) for s in self.moduli)
        if not mods:
            raise DomainError("moduli", "at least one modulus is required")
        for s in mods:
            if not 0 < s < 1:
                raise DomainError("moduli", f"modulus {s} not in (0, 1)")
        object.__setattr__(self, "moduli", mods)

    @property
    def centers(self):
        return [3.0 * n for n in range(len(self.moduli))]

    def contains(self, z):
        z = _c(z)
        out = np.zeros(z.shape, dtype=bool)
        for n, (s, zn) in enumerate(zip(self.moduli, self.centers), start=1):
            w = z - zn
            r = np.abs(w)
            inner = math.exp(-s)
            ann = (r > inner) & (r < 1.0)
            slab = (r > inner) & (r < 2.0) & (np.abs(w.imag) < 1.0 / n)
            out |= ann | slab
        return out

    def default_window(self):
        return (-2.0, 3.0 * (len(self.moduli) - 1) + 2.0, -1.05, 1.05)

    def end_window(self):
        """Window that cuts the last slab, so the chain leaves through the right edge."""
        return (-2.0, 3.0 * (len(self.moduli) - 1) + 1.5, -1.5, 1.5)

    @cached_property
    def _raster(self):
        return self.rasterize(self.clearance_h)

    def _clearance(self, z):
        return self._raster._edt_clearance(z)

    def nearest_boundary_point(self, z):
        return self._raster.nearest_boundary_point(z)

    def boundary_points(self, n, window=None):
        return self._raster.boundary_points(n)

    def to_spec(self):
        return {"kind": "chained_annuli", "moduli": list(self.moduli)}


@dataclass(frozen=True, eq=False, repr=False)
class Raster(PlanarDomain):
    """Cell mask; cell (i, j) has centre ``origin + j h + i h 1j``."""

    mask: np.ndarray = field(default=None)
    origin: complex = 0j
    spacing: float = 1.0
    source: Optional[PlanarDomain] = None

    kind = "raster"

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.ndim != 2:
            raise DomainError("mask", "raster mask must be 2-D")
        if not self.spacing > 0:
            raise DomainError("spacing", "raster spacing must be positive")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "origin", complex(self.origin))
        core = ndimage.binary_erosion(mask, structure=np.ones((3, 3), bool), border_value=0)
        if not core.any():
            raise DomainError("mask", "no interior cell with all 8 neighbours interior")

    @property
    def exact_clearance(self):
        return self.source is not None and self.source.exact_clearance

    @property
    def shape(self):
        return self.mask.shape

    @property
    def h(self):
        return self.spacing

    def centers(self):
        ny, nx = self.mask.shape
        xs = self.origin.real + self.spacing * np.arange(nx)
        ys = self.origin.imag + self.spacing * np.arange(ny)
        return xs[None, :] + 1j * ys[:, None]

    def window(self):
        ny, nx = self.mask.shape
        h = self.spacing
        x0, y0 = self.origin.real - h / 2, self.origin.imag - h / 2
        return (x0, x0 + nx * h, y0, y0 + ny * h)

    def cell_index(self, z):
        """Nearest cell indices (i, j); may fall outside the array."""
        z = _c(z)
        j = np.rint((z.real - self.origin.real) / self.spacing).astype(np.int64)
        i = np.rint((z.imag - self.origin.imag) / self.spacing).astype(np.int64)
        return i, j

    def contains(self, z):
        i, j = self.cell_index(z)
        ny, nx = self.mask.shape
        ok = (i >= 0) & (i < ny) & (j >= 0) & (j < nx)
        out = np.zeros(np.shape(i), dtype=bool)
        out[ok] = self.mask[i[ok], j[ok]]
        return out

    @cached_property
    def edt(self):
        """Distance from each interior cell centre to the mask boundary (minus half a cell)."""
        padded = np.pad(self.mask, 1, constant_values=False)
        d = ndimage.distance_transform_edt(padded)[1:-1, 1:-1] * self.spacing
        return np.where(self.mask, np.maximum(d - self.spacing / 2, 0.0), 0.0)

    def _edt_clearance(self, z):
        i, j = self.cell_index(z)
        ny, nx = self.mask.shape
        i = np.clip(i, 0, ny - 1)
        j = np.clip(j, 0, nx - 1)
        return self.edt[i, j]

    def _window_distance(self, z, tol=None):
        """Distance to the window edges along which the mask is cut."""
        z = _c(z)
        x0, x1, y0, y1 = self.window()
        m = self.mask
        out = np.full(z.shape, np.inf)
        for cut, d in ((m[:, 0].any(), z.real - x0), (m[:, -1].any(), x1 - z.real),
                       (m[0, :].any(), z.imag - y0), (m[-1, :].any(), y1 - z.imag)):
            if cut:
                out = np.minimum(out, d)
        return out

    def _clearance(self, z):
        if self.exact_clearance:
            return np.minimum(self.source._clearance(z), self._window_distance(z))
        return self._edt_clearance(z)

    def cell_clearance(self):
        """Clearance at every cell centre (0 outside the mask)."""
        if self.exact_clearance:
            c = self.centers()
            out = np.zeros(self.mask.shape)
            out[self.mask] = self._clearance(c[self.mask])
            return np.maximum(out, 0.0)
        return self.edt

    @cached_property
    def _nearest_exterior(self):
        padded = np.pad(self.mask, 1, constant_values=False)
        _, idx = ndimage.distance_transform_edt(padded, return_indices=True)
        return idx[0] - 1, idx[1] - 1

    def nearest_boundary_point(self, z):
        z = _c(z)
        if self.exact_clearance:
            zb = self.source.nearest_boundary_point(z)
            wd = self._window_distance(z)
            sd = self.source._clearance(z)
            if np.all(sd <= wd):
                return zb
        i, j = self.cell_index(z)
        ny, nx = self.mask.shape
        i = np.clip(i, 0, ny - 1)
        j = np.clip(j, 0, nx - 1)
        ei, ej = self._nearest_exterior
        ext = self.origin + self.spacing * (ej[i, j] + 1j * ei[i, j])
        d = self._clearance(z)
        direction = (ext - z) / np.maximum(np.abs(ext - z), 1e-300)
        return z + d * direction

    @cached_property
    def boundary_mask(self):
        inner = ndimage.binary_erosion(self.mask, structure=np.ones((3, 3), bool), border_value=0)
        return self.mask & ~inner

    def boundary_points(self, n=None, window=None):
        pts = self.centers()[self.boundary_mask]
        if n is not None and len(pts) > n:
            idx = np.linspace(0, len(pts) - 1, n).round().astype(int)
            pts = pts[idx]
        return pts

    def default_window(self):
        return self.window()

    def to_spec(self):
        return {
            "kind": "raster",
            "shape": list(self.mask.shape),
            "origin": [self.origin.real, self.origin.imag],
            "spacing": self.spacing,
            "source": None if self.source is None else self.source.to_spec(),
        }


def clearance(domain: PlanarDomain, z):
    """Euclidean distance from ``z`` to the boundary; QueryError outside."""
    out = domain.clearance(z)
    return float(out) if np.ndim(out) == 0 else out


_KINDS = {
    "disk": (Disk, {"center", "radius"}),
    "half_plane": (HalfPlane, set()),
    "strip": (Strip, {"width"}),
    "annulus": (Annulus, {"s"}),
    "punctured_disk": (PuncturedDisk, set()),
    "lattice_complement": (LatticeComplement, {"r"}),
    "chained_annuli": (ChainedAnnuli, {"moduli"}),
}

_RASTER_KEYS = {"source", "h", "window", "offset", "mask_pgm", "origin", "spacing"}


def build_domain(spec) -> PlanarDomain:
    """Build a validated domain from a dict such as ``{"kind": "annulus", "s": 1}``.

    Raster domains are given either as ``{"kind": "raster", "source": {...},
    "h": ..., "window": [...]}`` or from a PGM mask file.
    """
    if isinstance(spec, PlanarDomain):
        return spec
    if not isinstance(spec, dict) or "kind" not in spec:
        raise DomainError("kind", "domain spec must be a mapping with a 'kind' key")
    kind = spec["kind"]
    params = {k: v for k, v in spec.items() if k != "kind"}
    if kind == "raster":
        unknown = set(params) - _RASTER_KEYS
        if unknown:
            raise DomainError(sorted(unknown)[0], "unknown raster parameter")
        if "mask_pgm" in params:
            from kobgeo.io import read_pgm

            mask = read_pgm(params["mask_pgm"]) >= 128
            return Raster(
                mask=mask,
                origin=parse_complex(params.get("origin", 0)),
                spacing=float(params.get("spacing", 1.0)),
            )
        if "source" not in params or "h" not in params:
            raise DomainError("source", "raster spec needs 'source' and 'h' (or 'mask_pgm')")
        src = build_domain(params["source"])
        window = params.get("window")
        return src.rasterize(float(params["h"]), window=None if window is None else tuple(window),
                             offset=float(params.get("offset", 0.5)))
    if kind not in _KINDS:
        raise DomainError("kind", f"unknown domain kind {kind!r}")
    cls, allowed = _KINDS[kind]
    unknown = set(params) - allowed
    if unknown:
        raise DomainError(sorted(unknown)[0], f"unknown parameter for {kind}")
    if "center" in params:
        params["center"] = parse_complex(params["center"])
    if "moduli" in params:
        params["moduli"] = tuple(params["moduli"])
    for key in ("radius", "width", "s", "r"):
        if key in params:
            try:
                params[key] = float(params[key])
            except (TypeError, ValueError):
                raise DomainError(key, "must be a real number") from None
    return cls(**params)


# --------------------------------------------------------------------------
# cones


@dataclass(frozen=True)
class ConeParams:
    """Truncated cone (apex + Gamma(axis, aperture)) within B(apex, reach).

    ``aperture`` is the full opening angle: Gamma(v, t) = {z : Re<z, v> > cos(t/2)|z|}.
    """

    apex: complex
    axis: complex
    aperture: float
    reach: float
    side: str

    @property
    def half_angle(self):
        return self.aperture / 2


def cone_samples(apex, axis, aperture, reach, n_radial=24, n_angular=25, inner=0.0):
    """Sample points of the open truncated cone, radii in (inner, reach)."""
    rho = inner + (reach - inner) * (np.arange(1, n_radial + 1) - 0.5) / n_radial
    rho = np.concatenate([rho, [inner + (reach - inner) * (1 - 1e-9)]])
    half = aperture / 2 * (1 - 1e-9)
    phi = np.linspace(-half, half, n_angular)
    dirs = axis * np.exp(1j * phi)
    return apex + rho[:, None] * dirs[None, :]


def inward_normal(domain, x, n=64):
    """Unit direction from boundary point x into the domain, by sampling the
    clearance on a small circle around x."""
    x = complex(x)
    eps = 4 * domain.spacing if isinstance(domain, Raster) else 1e-4
    dirs = np.exp(2j * np.pi * np.arange(n) / n)
    pts = x + eps * dirs
    inside = np.asarray(domain.contains(pts), dtype=bool)
    if not inside.any():
        raise ConeConditionError(f"no interior direction at x={x!r}")
    d = np.full(n, -np.inf)
    d[inside] = domain._clearance(pts[inside])
    return complex(dirs[int(np.argmax(d))])


def _cone_ok(domain, pts, side):
    inside = domain.contains(pts)
    if side == "interior":
        return np.all(inside, axis=-1)
    return np.all(~inside, axis=-1)


def _apex_exclusion(domain):
    # raster membership is only resolved to one cell near the apex
    return 2.0 * domain.spacing if isinstance(domain, Raster) else 0.0


def verify_cone(domain, cone: ConeParams, n_radial=24, n_angular=25) -> bool:
    """Dense sampled check that the truncated cone lies on its declared side."""
    inner = _apex_exclusion(domain)
    if cone.reach <= inner:
        return False
    pts = cone_samples(cone.apex, cone.axis, cone.aperture, cone.reach,
                       n_radial, n_angular, inner).ravel()
    return bool(_cone_ok(domain, pts, cone.side))


def _default_reaches(domain, reach_max):
    if reach_max is None:
        if isinstance(domain, Raster):
            ny, nx = domain.shape
            reach_max = 0.25 * domain.spacing * min(nx, ny)
        else:
            reach_max = 1.0
    rmin = 4 * _apex_exclusion(domain) if isinstance(domain, Raster) else reach_max * 2.0 ** -12
    reaches = []
    r = reach_max
    while r >= rmin:
        reaches.append(r)
        r /= 2
    return np.array(reaches)


def estimate_cone_params(domain, x, side="exterior", n_axes=constants.CONE_AXES,
                         n_apertures=constants.CONE_APERTURES, reaches=None,
                         reach_max=None, min_reach=0.0, axis=None,
                         n_radial=24, n_angular=25) -> ConeParams:
    """Widest sampled cone at boundary point ``x`` on the requested side.

    Axes are 64 equally spaced directions (or the fixed ``axis``), apertures
    are k*pi/32 for k = 31..1.  The first aperture (largest) for which some
    axis and reach pass wins; among those the largest reach, then the lowest
    axis index.  Raises ConeConditionError if nothing passes.
    """
    if side not in ("interior", "exterior"):
        raise ValueError("side must be 'interior' or 'exterior'")
    x = complex(x)
    if reaches is None:
        reaches = _default_reaches(domain, reach_max)
    reaches = np.sort(np.asarray(reaches, dtype=float))[::-1]
    reaches = reaches[reaches >= min_reach]
    if reaches.size == 0:
        raise ConeConditionError(f"cone condition fails at x={x!r}: no reach >= {min_reach:g}")
    if axis is None:
        axes = np.exp(2j * np.pi * np.arange(n_axes) / n_axes)
    else:
        axes = np.array([complex(axis) / abs(axis)])
    inner = _apex_exclusion(domain)
    reaches = reaches[reaches > inner]
    unit_rho = (np.arange(1, n_radial + 1) - 0.5) / n_radial
    unit_rho = np.concatenate([unit_rho, [1 - 1e-9]])
    for k in range(n_apertures - 1, 0, -1):
        theta = k * np.pi / n_apertures
        half = theta / 2 * (1 - 1e-9)
        phi = np.linspace(-half, half, n_angular)
        # (axis, reach, rho, phi)
        rho = inner + (reaches[:, None] - inner) * unit_rho[None, :]
        pts = (x + rho[None, :, :, None] * axes[:, None, None, None]
               * np.exp(1j * phi)[None, None, None, :])
        ok = _cone_ok(domain, pts.reshape(len(axes), len(reaches), -1), side)
        if ok.any():
            # largest reach first, then lowest axis index
            for ri in range(len(reaches)):
                hits = np.flatnonzero(ok[:, ri])
                if hits.size:
                    return ConeParams(x, complex(axes[hits[0]]), float(theta),
                                      float(reaches[ri]), side)
    raise ConeConditionError(f"cone condition fails at x={x!r} ({side})")


def interior_cone(domain, x, reach_max=None, **kw) -> ConeParams:
    """Interior cone at x, preferring the sampled inward normal as axis."""
    try:
        return estimate_cone_params(domain, x, "interior", axis=inward_normal(domain, x),
                                    reach_max=reach_max, **kw)
    except ConeConditionError:
        return estimate_cone_params(domain, x, "interior", reach_max=reach_max, **kw)
