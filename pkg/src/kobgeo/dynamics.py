"""Iteration of closed-form holomorphic self-maps and orbit classification."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from kobgeo.domains import Annulus, Disk, HalfPlane, LatticeComplement, PlanarDomain
from kobgeo.ends import TailClass, build_end_tree, classify_tail, lattice_end_raster
from kobgeo.errors import ConfigError, EscapeError, QueryError
from kobgeo.oracle import as_geometry
from kobgeo.parallel import pmap
from kobgeo.visibility import STABILITY_FACTOR

log = logging.getLogger(__name__)

__all__ = [
    "MapSpec",
    "OrbitReport",
    "iterate",
    "orbit_report",
    "record_times",
    "compact_divergence_check",
    "sample_domain",
    "MIN_ORBIT_LENGTH",
]

MIN_ORBIT_LENGTH = 500
SELF_MAP_SAMPLES = 1000
# declared bounds of the relatively-compact heuristic
MAX_ABS = 1e6
MAX_INV_CLEARANCE = 1e6


def sample_domain(domain, n, seed=0, window=None):
    """``n`` uniformly drawn points of the domain within a window (rejection)."""
    rng = np.random.default_rng(seed)
    x0, x1, y0, y1 = window or domain.default_window()
    out = np.zeros(0, dtype=complex)
    while len(out) < n:
        z = rng.uniform(x0, x1, 4 * n) + 1j * rng.uniform(y0, y1, 4 * n)
        out = np.concatenate([out, z[np.asarray(domain.contains(z), dtype=bool)]])
    return out[:n]


@dataclass(eq=False)
class MapSpec:
    """A holomorphic self-map with its domain.

    Use the constructors :meth:`disk_mobius`, :meth:`disk_rotation`,
    :meth:`annulus_rotation`, :meth:`lattice_translation`,
    :meth:`half_plane_affine`, or :meth:`custom` for user maps.
    """

    kind: str
    params: dict
    domain: PlanarDomain
    fn: Callable = field(repr=False)
    checked: bool = False

    def __post_init__(self):
        self._check_self_map()

    def __call__(self, z):
        return self.fn(np.asarray(z, dtype=complex))

    def _check_self_map(self):
        win = (-3.0, 3.0, -3.0, 3.0) if isinstance(self.domain, LatticeComplement) else None
        if isinstance(self.domain, HalfPlane):
            win = (-5.0, 5.0, 0.0, 5.0)
        z = sample_domain(self.domain, SELF_MAP_SAMPLES, seed=0, window=win)
        bad = ~np.asarray(self.domain.contains(self(z)), dtype=bool)
        if bad.any():
            raise ConfigError(f"{self.kind} does not map the domain into itself (e.g. z={z[bad][0]!r})")
        self.checked = True

    # constructors

    @classmethod
    def disk_mobius(cls, a, phi=0.0):
        a = complex(a)
        if not abs(a) < 1:
            raise ConfigError("DiskMobius needs |a| < 1")
        rot = complex(math.cos(phi), math.sin(phi))
        return cls("disk_mobius", {"a": a, "phi": float(phi)}, Disk(),
                   lambda z: rot * (z + a) / (1 + np.conj(a) * z))

    @classmethod
    def disk_rotation(cls, theta):
        rot = complex(math.cos(theta), math.sin(theta))
        return cls("disk_rotation", {"theta": float(theta)}, Disk(), lambda z: rot * z)

    @classmethod
    def annulus_rotation(cls, theta, s=1.0):
        rot = complex(math.cos(theta), math.sin(theta))
        return cls("annulus_rotation", {"theta": float(theta), "s": float(s)}, Annulus(s), lambda z: rot * z)

    @classmethod
    def lattice_translation(cls, step=1, r=0.25):
        step = complex(step)
        if step not in (1, 1j):
            raise ConfigError("LatticeTranslation step must be 1 or i")
        return cls("lattice_translation", {"step": step, "r": float(r)}, LatticeComplement(r),
                   lambda z: z + step)

    @classmethod
    def half_plane_affine(cls, alpha, beta=0.0):
        if not alpha > 0:
            raise ConfigError("HalfPlaneAffine needs alpha > 0")
        alpha, beta = float(alpha), float(beta)
        return cls("half_plane_affine", {"alpha": alpha, "beta": beta}, HalfPlane(), lambda z: alpha * z + beta)

    @classmethod
    def custom(cls, fn, domain, name="custom"):
        warnings.warn("custom map accepted after a sampled self-map check only", stacklevel=2)
        return cls(name, {}, domain, fn)

    @classmethod
    def from_config(cls, spec):
        spec = dict(spec)
        kind = spec.pop("kind", None)
        makers = {
            "disk_mobius": (cls.disk_mobius, {"a", "phi"}),
            "disk_rotation": (cls.disk_rotation, {"theta"}),
            "annulus_rotation": (cls.annulus_rotation, {"theta", "s"}),
            "lattice_translation": (cls.lattice_translation, {"step", "r"}),
            "half_plane_affine": (cls.half_plane_affine, {"alpha", "beta"}),
        }
        if kind not in makers:
            raise ConfigError(f"unknown map kind {kind!r}")
        fn, allowed = makers[kind]
        unknown = set(spec) - allowed
        if unknown:
            raise ConfigError(f"unknown map parameter {sorted(unknown)[0]!r}")
        from kobgeo.domains import parse_complex

        for key in ("a", "step"):
            if key in spec:
                spec[key] = parse_complex(spec[key])
        return fn(**spec)


def iterate(fmap: MapSpec, z0, N) -> np.ndarray:
    """z0, F(z0), ..., F^N(z0); raises EscapeError naming the first bad step."""
    if N < 1:
        raise ValueError("N must be at least 1")
    z = complex(z0)
    if not fmap.domain.contains(np.array(z)):
        raise QueryError("z0 outside the domain")
    out = np.empty(N + 1, dtype=complex)
    out[0] = z
    for n in range(1, N + 1):
        z = complex(fmap(z))
        if not (math.isfinite(z.real) and math.isfinite(z.imag)) or not fmap.domain.contains(np.array(z)):
            raise EscapeError(n, z)
        out[n] = z
    return out


def record_times(d):
    """1-based indices where d exceeds every earlier entry."""
    out = []
    best = -math.inf
    for i, v in enumerate(d, start=1):
        if v > best:
            out.append(i)
            best = v
    return tuple(out)


def _stable(x, factor=STABILITY_FACTOR, atol=1e-9):
    n = len(x)
    if n < 3:
        return True
    third = n // 3
    return float(np.max(x[2 * third:])) <= factor * float(np.max(x[third:2 * third])) + atol


@dataclass
class OrbitReport:
    base_points: tuple
    orbits: list
    d: list
    verdict: str
    target: Optional[object]
    targets: list
    records: list
    truncated: list
    notes: list = field(default_factory=list)

    @property
    def relatively_compact(self):
        return self.verdict == "relatively-compact"

    def rows(self, k=0):
        """(n, x, y, d_n) for the k-th base point."""
        z, d = self.orbits[k], self.d[k]
        return [(n, float(z[n].real), float(z[n].imag), float(d[n - 1]) if n else 0.0) for n in range(len(z))]


def _orbit_geometry(fmap, orbits):
    dom = fmap.domain
    if isinstance(dom, LatticeComplement):
        pts = np.concatenate(orbits)
        x0, x1 = math.floor(pts.real.min()) - 1.5, math.ceil(pts.real.max()) + 1.5
        y0, y1 = math.floor(pts.imag.min()) - 1.5, math.ceil(pts.imag.max()) + 1.5
        return as_geometry(dom, window=(x0, x1, y0, y1), graph_h=1 / 16, relax=False)
    return as_geometry(dom)


def _run(fmap, z0, N):
    try:
        return iterate(fmap, z0, N), None
    except EscapeError as exc:
        z = np.empty(exc.step, dtype=complex)
        z[0] = complex(z0)
        for n in range(1, exc.step):
            z[n] = complex(fmap(z[n - 1]))
        return z, exc.step


def orbit_report(fmap: MapSpec, base_points, N=MIN_ORBIT_LENGTH, end_radii=(4.0, 8.0, 16.0)) -> OrbitReport:
    """Classify orbits as relatively compact or converging to a common target.

    Orbits that leave the domain numerically are truncated at the escape
    step; the truncation is noted and the truncated orbit is classified.
    """
    base_points = tuple(complex(b) for b in base_points)
    if len(base_points) < 2:
        raise ValueError("at least two base points are required")
    notes = []
    if N < MIN_ORBIT_LENGTH:
        notes.append(f"N={N} below the recommended {MIN_ORBIT_LENGTH}")
    runs = pmap(lambda b: _run(fmap, b, N), base_points)
    orbits = [r[0] for r in runs]
    truncated = [r[1] for r in runs]
    for b, t in zip(base_points, truncated):
        if t is not None:
            notes.append(f"orbit of {b} escaped numerically at step {t}; truncated")
    geo = _orbit_geometry(fmap, orbits)
    ds = []
    for b, z in zip(base_points, orbits):
        if geo.exact:
            d = np.asarray(geo.distance(np.full(len(z) - 1, b), z[1:]), dtype=float)
        else:
            d = geo.distance_matrix(np.array([b]), z[1:], relax=False)[0][0]
        ds.append(np.atleast_1d(d))
    records = [record_times(d) for d in ds]
    dom = fmap.domain
    compact = True
    for z, d, t in zip(orbits, ds, truncated):
        inv_clear = 1.0 / np.asarray(dom._clearance(z), dtype=float)
        bounded = np.abs(z).max() <= MAX_ABS and inv_clear.max() <= MAX_INV_CLEARANCE
        if t is not None or not bounded or not (_stable(np.abs(z)) and _stable(inv_clear) and _stable(d)):
            compact = False
    if compact:
        return OrbitReport(base_points, orbits, ds, "relatively-compact", None, [], records, truncated, notes)
    tree = None
    if isinstance(dom, LatticeComplement):
        tree = build_end_tree(lattice_end_raster(r=dom.r), end_radii)
    targets = [_classify(tree, z, dom) for z in orbits]
    first = targets[0]
    agree = all(first.same_target(t, tol=1e-6) for t in targets[1:])
    if first.kind in ("end", "boundary point") and agree:
        verdict, target = "converges-to", first
    else:
        verdict, target = "dichotomy violation", None
        kinds = ", ".join(sorted({t.kind for t in targets}))
        notes.append(f"base points do not share a limit target ({kinds})")
    return OrbitReport(base_points, orbits, ds, verdict, target, targets, records, truncated, notes)


def _classify(tree, z, dom):
    tail = np.abs(z[-max(2, len(z) // 3):])
    if tree is None and tail[0] > MAX_ABS and np.all(np.diff(tail) > 0):
        # half-plane and strip closures minus a ball have one or two
        # unbounded pieces; the direction of escape names the end
        if isinstance(dom, HalfPlane):
            return TailClass("end", "infinity")
    return classify_tail(tree, z, domain=dom)


@dataclass(frozen=True)
class DivergenceResult:
    n0: Optional[int]
    N: int
    eps: float
    hits: tuple

    @property
    def divergent(self):
        return self.n0 is not None

    def __str__(self):
        return f"n0={self.n0}" if self.divergent else f"not divergent within {self.N}"


def compact_divergence_check(fmap: MapSpec, K1, K2, N, eps=None) -> DivergenceResult:
    """First n0 with F^n(K1) missing the eps-fattening of K2 for all n0 <= n <= N.

    ``eps`` defaults to the largest nearest-neighbour gap of the K2 sample.
    Points that leave the domain numerically are dropped (they have left
    every compact subset)."""
    K1 = np.asarray(K1, dtype=complex).ravel()
    K2 = np.asarray(K2, dtype=complex).ravel()
    tree = cKDTree(np.column_stack([K2.real, K2.imag]))
    if eps is None:
        if len(K2) > 1:
            dd, _ = tree.query(np.column_stack([K2.real, K2.imag]), k=2)
            eps = float(dd[:, 1].max())
        else:
            eps = 0.0
    z = K1.copy()
    hits = []
    for n in range(1, N + 1):
        with np.errstate(all="ignore"):
            z = fmap(z)
        alive = np.isfinite(z) & np.asarray(fmap.domain.contains(z), dtype=bool)
        z = z[alive]
        if z.size == 0:
            break
        dist, _ = tree.query(np.column_stack([z.real, z.imag]), k=1)
        if np.any(dist <= eps):
            hits.append(n)
    last = hits[-1] if hits else 0
    n0 = last + 1 if last < N else None
    return DivergenceResult(n0, N, eps, tuple(hits))
