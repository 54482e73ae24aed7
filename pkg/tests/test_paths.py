import math

import numpy as np
import pytest

from kobgeo import Annulus, Disk, HalfPlane, PathError, Strip, solve_density_pde
from kobgeo.oracle import as_geometry, exact_distance, exact_geodesic
from kobgeo.paths import (
    Path,
    certify,
    comparability_constant,
    construct_almost_geodesic,
    distance,
    minimal_kappa,
    path_length,
    radial_almost_geodesic,
    tame_quasi_geodesic,
)

ATANH_05 = 0.549306144334055
HALF_PLANE_I_2I = 0.346573590279973


def test_path_rejects_bad_knots():
    with pytest.raises(PathError):
        Path([0, 0], [0, 1])
    with pytest.raises(PathError):
        Path([0, 1], [0])


def test_length_of_radial_segment():
    p = Path([0, 1], [0, 0.5])
    assert path_length(Disk(), p) == pytest.approx(ATANH_05, rel=1e-6)
    assert path_length(Disk(), p, rtol=1e-12, max_level=20) == pytest.approx(ATANH_05, rel=1e-10)


def test_length_half_plane_vertical():
    p = Path([0, 1, 2], [1j, 1.5j, 2j])
    assert path_length(HalfPlane(), p) == pytest.approx(HALF_PLANE_I_2I, rel=1e-6)
    assert path_length(HalfPlane(), p, rtol=1e-12, max_level=20) == pytest.approx(HALF_PLANE_I_2I, rel=1e-10)


def test_length_at_least_distance():
    p = Path([0, 1, 2], [0.1, 0.4 + 0.4j, -0.3 + 0.2j])
    assert path_length(Disk(), p) >= exact_distance(Disk(), 0.1, -0.3 + 0.2j)


def test_length_leaving_domain_raises():
    with pytest.raises(PathError):
        path_length(Disk(), Path([0, 1], [-0.9, 1.5]))


def test_constant_path_has_zero_length():
    assert path_length(Disk(), Path.constant(0.3)) == 0.0
    assert path_length(Disk(), Path.constant(0.3, 0, 1)) == 0.0


def test_distance_same_point():
    assert distance(Disk(), 0.2, 0.2) == 0.0


def test_certify_exact_geodesic_passes():
    K, sigma = exact_geodesic(Disk(), -0.5, 0.6j)
    t = np.linspace(0, K, 2001)
    cert = certify(Disk(), Path(t, sigma(t)), 1.0, 1e-3, n=41)
    assert cert.passed
    assert cert.max_violation <= 1e-3


def test_certify_fast_curve_fails():
    K, sigma = exact_geodesic(Disk(), -0.5, 0.5)
    t = np.linspace(0, K, 501)
    fast = Path(t / 2, sigma(t))
    cert = certify(Disk(), fast, 1.0, 0.01, n=21)
    assert cert.verdict == "fail"
    assert certify(Disk(), fast, 2.0 * 1.001, 0.01, n=21).passed


def test_certify_bad_parameters():
    p = Path([0, 1], [0, 0.1])
    with pytest.raises(ValueError):
        certify(Disk(), p, 0.5)
    with pytest.raises(ValueError):
        certify(Disk(), p, 1.0, -1)


def test_certify_numeric_small_kappa_is_inconclusive():
    geo = as_geometry(solve_density_pde(Disk().rasterize(1 / 32)))
    path, _ = construct_almost_geodesic(geo, -0.4, 0.4, 1.0, n=9, certify_path=False)
    cert = certify(geo, path, 1.0, 1e-6, n=9)
    assert cert.verdict in ("inconclusive", "fail")
    assert cert.error_bar >= 0


def test_construct_on_strip_and_annulus():
    for dom, z, w in ((Strip(1), -0.5 - 2j, -0.2 + 2j), (Annulus(1), 0.5, -0.5)):
        path, cert = construct_almost_geodesic(dom, z, w, 1e-3, n=31)
        assert cert.passed
        assert path.t1 == pytest.approx(exact_distance(dom, z, w), rel=1e-9)


def test_construct_rejects_equal_endpoints():
    with pytest.raises(ValueError):
        construct_almost_geodesic(Disk(), 0.1, 0.1, 0.1)


def test_tame_quasi_geodesic():
    K, sigma = exact_geodesic(Disk(), -0.8, 0.8)
    t = np.linspace(0, K, 9)
    z = sigma(t) * (1 + 0.02 * np.sin(np.arange(9)))
    res = tame_quasi_geodesic(Disk(), list(zip(t, z)), 1.5, 0.5, n=21)
    assert res.pieces == 8
    assert res.hausdorff < 0.5
    assert res.certificate.passed


def test_tame_rejects_violating_samples():
    with pytest.raises(PathError):
        tame_quasi_geodesic(Disk(), [(0, 0), (0.01, 0.9)], 1.0, 0.1)


def test_radial_on_annulus_outer_circle():
    res = radial_almost_geodesic(Annulus(1), 1 + 0j, -1, 0.2, 2.0, kappa=1e-3, n=41)
    lo, hi = res.bracket
    assert res.certificate.passed
    assert 1 <= res.lam_hat <= hi


def test_radial_zero_time():
    res = radial_almost_geodesic(Disk(), 1 + 0j, -1, 1.0, 0.0)
    assert len(res.path) == 1 and res.certificate.passed


def test_minimal_kappa_and_comparability():
    K, sigma = exact_geodesic(Disk(), 0, 0.5)
    t = np.linspace(0, K, 101)
    p = Path(t, sigma(t))
    assert minimal_kappa(Disk(), p, 1.0, n=21) < 1e-6
    assert comparability_constant(Disk(), p) == pytest.approx(1 / (1 - 0.25), rel=1e-6)


def test_concatenate_requires_join():
    a = Path([0, 1], [0, 0.1])
    b = Path([0, 1], [0.2, 0.3])
    with pytest.raises(PathError):
        Path.concatenate([a, b])
    c = Path.concatenate([a, Path([0, 2], [0.1, 0.3])])
    assert c.t1 == 3 and math.isclose(c.z[-1].real, 0.3)
