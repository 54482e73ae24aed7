import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kobgeo import Annulus, Disk, HalfPlane, KobgeoError, LatticeComplement, PuncturedDisk, QueryError, Strip
from kobgeo.oracle import as_geometry, exact_distance, exact_geodesic, lift_window

# frozen from mpmath at 30 digits
ATANH_09 = 1.47221948958322
ATANH_05 = 0.549306144334055
HALF_PLANE_I_2I = 0.346573590279973  # log(2) / 2
DISK_PAIR = 0.588576573484013
CORE_HALF_TURN = 4.93480220054468  # pi^2 / 2


def test_disk_examples():
    assert exact_distance(Disk(), 0, 0.9) == pytest.approx(ATANH_09, abs=1e-13)
    assert exact_distance(Disk(), 0, 0.5) == pytest.approx(ATANH_05, abs=1e-13)
    assert exact_distance(Disk(), 0.3 + 0.2j, -0.1 + 0.5j) == pytest.approx(DISK_PAIR, abs=1e-13)


def test_half_plane_example():
    assert exact_distance(HalfPlane(), 1j, 2j) == pytest.approx(HALF_PLANE_I_2I, abs=1e-14)


def test_annulus_core_half_turn():
    r0 = math.exp(-0.5)
    assert exact_distance(Annulus(1), r0, -r0) == pytest.approx(CORE_HALF_TURN, abs=1e-11)


def test_annulus_core_arc_is_linear_in_angle():
    r0 = math.exp(-0.5)
    for phi in (0.1, 0.7, 2.0):
        K = exact_distance(Annulus(1), r0, r0 * np.exp(1j * phi))
        assert K == pytest.approx(math.pi * phi / 2, rel=1e-12)


def test_strip_matches_half_plane_chart():
    # w -> exp(-i pi w) maps {-1 < Re < 0} onto the upper half plane
    S = Strip(1)
    z, w = -0.3 + 0.5j, -0.8 - 1.2j
    f = lambda u: np.exp(-1j * np.pi * u)  # noqa: E731
    assert exact_distance(S, z, w) == pytest.approx(exact_distance(HalfPlane(), f(z), f(w)), rel=1e-12)


def test_lift_window_grows():
    X, k, m = lift_window(lambda k: (k - 20.0) ** 2)
    assert k == 20 and X == 0 and m >= 24


def test_lift_choice_is_locally_minimal():
    A = Annulus(0.5)
    rng = np.random.default_rng(1)
    for _ in range(50):
        z = np.exp(rng.uniform(-0.49, -0.01) + 1j * rng.uniform(0, 2 * np.pi))
        w = np.exp(rng.uniform(-0.49, -0.01) + 1j * rng.uniform(0, 2 * np.pi))
        K, k = exact_distance(A, z, w, return_k=True)
        # brute force over a wide deck window
        lz, lw = np.log(z), np.log(w)
        vals = []
        for j in range(-10, 11):
            b = lw + 2j * np.pi * j
            a_ = np.pi * (lz.imag - b.imag) / (2 * 0.5)
            sp = np.sin(np.pi * (lw.real - lz.real) / (2 * 0.5)) ** 2
            den = np.sin(-np.pi * lz.real / 0.5) * np.sin(-np.pi * lw.real / 0.5)
            vals.append(np.arcsinh(np.sqrt((np.sinh(a_) ** 2 + sp) / den)))
        assert K == pytest.approx(min(vals), rel=1e-12)


def test_no_closed_form_for_lattice():
    with pytest.raises(KobgeoError):
        exact_distance(LatticeComplement(0.25), 0.5 + 0.5j, 1.5 + 0.5j)


def test_outside_point_rejected():
    geo = as_geometry(Disk())
    with pytest.raises(QueryError):
        geo.distance_with_error(0, 1.2)
    with pytest.raises(QueryError):
        geo.distance_matrix([0, 0.5, 3])


@pytest.mark.parametrize(
    "dom, z, w",
    [
        (Disk(), 0.1 + 0.2j, -0.6 + 0.3j),
        (HalfPlane(), 1 + 1j, -2 + 0.5j),
        (Strip(1), -0.2 + 3j, -0.7 - 1j),
        (Annulus(1), 0.5, -0.6 + 0.1j),
        (PuncturedDisk(), 0.5, 0.2j),
    ],
)
def test_geodesic_is_unit_speed(dom, z, w):
    K, sigma = exact_geodesic(dom, z, w)
    assert abs(sigma(0) - z) < 1e-10 and abs(sigma(K) - w) < 1e-10
    t = np.linspace(0, K, 9)
    p = sigma(t)
    for a, b, ta, tb in zip(p[:-1], p[1:], t[:-1], t[1:]):
        assert exact_distance(dom, a, b) == pytest.approx(tb - ta, rel=1e-8)


@pytest.mark.parametrize(
    "dom, z, w",
    [
        (Annulus(0.1), math.exp(-0.05), np.exp(-0.05 + 2j * math.pi / 3)),
        (Annulus(0.05), math.exp(-0.025), np.exp(-0.025 + 2j * math.pi / 3)),
        (Strip(0.5), -0.1 - 20j, -0.4 + 30j),
        (HalfPlane(), 1j, 1e-6 + 1e6j),
    ],
)
def test_long_geodesics_stay_exact(dom, z, w):
    K, sigma = exact_geodesic(dom, z, w)
    assert K > 5
    assert abs(sigma(0) - z) <= 1e-9 * max(1, abs(z)) and abs(sigma(K) - w) <= 1e-9 * max(1, abs(w))
    t = np.linspace(0, K, 17)
    p = sigma(t)
    assert np.all(dom.contains(p))
    seg = [exact_distance(dom, a, b) for a, b in zip(p[:-1], p[1:])]
    np.testing.assert_allclose(seg, np.diff(t), rtol=1e-9)


def test_numeric_distance_disk_raster():
    geo = as_geometry(Disk(), h=None)
    assert geo.exact
    from kobgeo import solve_density_pde

    num = as_geometry(solve_density_pde(Disk().rasterize(1 / 64)))
    K, err = num.distance_with_error(0, 0.5)
    assert abs(K - ATANH_05) / ATANH_05 < 0.02
    assert err >= 0


@given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9), st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
def test_disk_distance_symmetric_and_nonnegative(a, b, c, d):
    z, w = complex(a, b) * 0.7, complex(c, d) * 0.7
    K = exact_distance(Disk(), z, w)
    assert K >= 0
    assert K == pytest.approx(exact_distance(Disk(), w, z), abs=1e-12)


@given(st.floats(0.0, 2 * np.pi), st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
def test_annulus_rotation_invariance(theta, x, y):
    A = Annulus(1)
    z = np.exp(-0.5 + x * 0.5 + 1j * y)
    w = np.exp(-0.5 - y * 0.4 + 2j * x)
    u = np.exp(1j * theta)
    assert exact_distance(A, u * z, u * w) == pytest.approx(exact_distance(A, z, w), abs=1e-10)
