"""Numerical laboratory for the Kobayashi (Poincare) geometry of planar domains."""

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
    build_domain,
    clearance,
    estimate_cone_params,
)
from kobgeo.errors import (
    CertificationError,
    ConeConditionError,
    ConfigError,
    DomainError,
    EscapeError,
    IntegrityError,
    KobgeoError,
    NonConvergenceError,
    PathError,
    QueryError,
)
from kobgeo.metric import (
    DensityBounds,
    DensityField,
    density,
    density_bounds,
    kobayashi_metric,
    solve_density_pde,
)

__version__ = "0.1.0"

__all__ = [
    "Annulus",
    "CertificationError",
    "ChainedAnnuli",
    "ConeConditionError",
    "ConeParams",
    "ConfigError",
    "DensityBounds",
    "DensityField",
    "Disk",
    "DomainError",
    "EscapeError",
    "HalfPlane",
    "IntegrityError",
    "KobgeoError",
    "LatticeComplement",
    "NonConvergenceError",
    "PathError",
    "PlanarDomain",
    "PuncturedDisk",
    "QueryError",
    "Raster",
    "Strip",
    "build_domain",
    "clearance",
    "density",
    "density_bounds",
    "estimate_cone_params",
    "kobayashi_metric",
    "solve_density_pde",
]
