"""Global numerical conventions.

The conformal density is normalized to curvature -4, i.e. the unit disk has
density 1/(1 - |z|^2) and K(0, r) = artanh(r).  An auditor comparing with a
curvature -1 convention multiplies densities and distances by this factor.
"""

CURVATURE = -4.0
CURVATURE_MINUS_ONE_SCALE = 2.0

# raster PDE
COLLAR_CELLS = 3
PDE_TOLERANCE = 1e-9
PDE_STAGNATION_WINDOW = 20

# cone search
CONE_AXES = 64
CONE_APERTURES = 32

# quadrature
LENGTH_RTOL = 1e-6

# certification
CERT_GRID = 64
SPEED_TOL = 1e-3

# numeric geodesic relaxation
RELAX_RTOL = 1e-7
