import math

import numpy as np
import pytest

from kobgeo import Disk, HalfPlane, QueryError, Raster, density
from kobgeo.grid import GridGeometry
from kobgeo.oracle import exact_distance


def _disk_grid(h):
    r = Disk().rasterize(h)
    return GridGeometry(r, lambda z: np.asarray(density(Disk(), z)), domain=Disk())


def test_graph_distance_overestimates_and_relaxation_closes_gap():
    g = _disk_grid(1 / 32)
    res = g.distance(-0.5 + 0.1j, 0.4 + 0.3j)
    exact = exact_distance(Disk(), -0.5 + 0.1j, 0.4 + 0.3j)
    assert res.graph >= res.value
    assert res.error == pytest.approx(res.graph - res.value)
    assert abs(res.value - exact) / exact < 0.01
    assert res.knots[0] == -0.5 + 0.1j and res.knots[-1] == 0.4 + 0.3j


def test_relaxed_error_shrinks_with_h():
    z, w = -0.3j, 0.6 + 0.2j
    exact = exact_distance(Disk(), z, w)
    errs = [abs(_disk_grid(h).distance(z, w).value - exact) for h in (1 / 16, 1 / 64)]
    assert errs[1] < errs[0]


def test_segment_cost_is_exact_for_constant_density():
    r = HalfPlane().rasterize(0.25, window=(-1, 1, 0, 2))
    g = GridGeometry(r, lambda z: np.ones(np.shape(z)), domain=HalfPlane())
    assert float(g.segment_cost(np.array([0.1j]), np.array([0.3 + 0.5j]))[0]) == pytest.approx(0.5)


def test_disconnected_components_are_infinitely_far():
    h = 1 / 16
    xs = -1 + h * (np.arange(32) + 0.5)
    X, Y = np.meshgrid(xs, xs)
    mask = (np.abs(X + 0.5) < 0.4) | (np.abs(X - 0.5) < 0.4)
    r = Raster(mask=mask, origin=complex(xs[0], xs[0]), spacing=h)
    g = GridGeometry(r, lambda z: np.ones(np.shape(z)))
    assert len(np.unique(g.components())) == 2
    assert math.isinf(g.distance(-0.5, 0.5).value)
    assert math.isinf(g.graph_distances([-0.5], [0.5])[0, 0])


def test_query_far_outside_window():
    g = _disk_grid(1 / 16)
    with pytest.raises(QueryError):
        g.node_of(5 + 5j)


def test_graph_distances_symmetric_with_zero_diagonal():
    g = _disk_grid(1 / 16)
    pts = np.array([0, 0.3, -0.4j, 0.5 + 0.5j])
    D = g.graph_distances(pts)
    assert np.allclose(D, D.T) and np.all(np.diag(D) == 0)
