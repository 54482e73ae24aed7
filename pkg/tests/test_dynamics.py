import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kobgeo import Annulus, ConfigError, Disk, DomainError, EscapeError, HalfPlane, QueryError
from kobgeo.dynamics import (
    MapSpec,
    compact_divergence_check,
    iterate,
    orbit_report,
    record_times,
    sample_domain,
)
from kobgeo.oracle import exact_distance


def test_rotation_iterates():
    z = iterate(MapSpec.disk_rotation(math.pi / 2), 0.5, 4)
    np.testing.assert_allclose(z, [0.5, 0.5j, -0.5, -0.5j, 0.5], atol=1e-15)


def test_mobius_fixes_boundary_points():
    f = MapSpec.disk_mobius(0.5)
    assert abs(f(1 + 0j) - 1) < 1e-15 and abs(f(-1 + 0j) + 1) < 1e-15
    assert abs(f(0j) - 0.5) < 1e-15


def test_lattice_translation_and_affine():
    z = iterate(MapSpec.lattice_translation(1j), 0.5 + 0.5j, 3)
    np.testing.assert_allclose(z, 0.5 + 0.5j + 1j * np.arange(4))
    z = iterate(MapSpec.half_plane_affine(2.0, 1.0), 1j, 2)
    np.testing.assert_allclose(z, [1j, 1 + 2j, 3 + 4j])


def test_invalid_maps():
    with pytest.raises((DomainError, ValueError)):
        MapSpec.lattice_translation(2)
    with pytest.raises((DomainError, ValueError)):
        MapSpec.half_plane_affine(-1)
    with pytest.raises(ConfigError):
        MapSpec.from_config({"kind": "disk_rotation", "theta": 1, "speed": 2})
    with pytest.raises(ConfigError):
        MapSpec.from_config({"kind": "shear"})


def test_from_config():
    f = MapSpec.from_config({"kind": "disk_mobius", "a": "0.5"})
    assert abs(f(0j) - 0.5) < 1e-15


def test_custom_map_must_map_samples_inside():
    with pytest.raises(ConfigError), pytest.warns(UserWarning):
        MapSpec.custom(lambda z: 2 * z, Disk())


def test_escape_names_the_first_bad_step():
    # passes the sampled check, but the orbit of 0 reaches the bad rim
    fn = lambda z: np.where(np.abs(z) < 1 - 1e-5, (z + 1) / 2, 2 * z)  # noqa: E731
    with pytest.warns(UserWarning):
        f = MapSpec.custom(fn, Disk())
    with pytest.raises(EscapeError) as err:
        iterate(f, 0j, 40)
    # 1 - 2^-n first reaches 1 - 1e-5 at n = 17
    assert err.value.step == 18


def test_iterate_rejects_outside_start():
    with pytest.raises(QueryError):
        iterate(MapSpec.disk_rotation(1.0), 1.5, 3)
    with pytest.raises(ValueError):
        iterate(MapSpec.disk_rotation(1.0), 0.1, 0)


def test_record_times_examples():
    assert record_times([1, 3, 2, 5, 5, 7]) == (1, 2, 4, 6)
    assert record_times([]) == ()
    assert record_times([2, 1, 0]) == (1,)


@given(st.lists(st.floats(0, 100), min_size=1, max_size=40))
def test_record_times_are_strict_running_maxima(d):
    nu = record_times(d)
    assert nu[0] == 1
    vals = [d[i - 1] for i in nu]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert vals[-1] == max(d)


def test_orbit_verdicts():
    assert orbit_report(MapSpec.disk_rotation(1.0), [0j, 0.3], 200).relatively_compact
    assert orbit_report(MapSpec.annulus_rotation(1.0, 1.0), [0.5, -0.6j], 200).relatively_compact
    rep = orbit_report(MapSpec.disk_mobius(0.5), [0j, 0.3j], 200)
    assert rep.verdict == "converges-to" and abs(rep.target.point - 1) < 1e-6
    rep = orbit_report(MapSpec.half_plane_affine(2.0), [1j, 1 + 1j], 200)
    assert rep.verdict == "converges-to" and rep.target.end == "infinity"


def test_orbit_needs_two_points():
    with pytest.raises(ValueError):
        orbit_report(MapSpec.disk_rotation(1.0), [0j])


def test_orbit_rows():
    rep = orbit_report(MapSpec.disk_rotation(1.0), [0j, 0.3], 10)
    rows = rep.rows(1)
    assert rows[0] == (0, 0.3, 0.0, 0.0)
    assert rows[1][3] == pytest.approx(exact_distance(Disk(), 0.3, 0.3 * np.exp(1j)))


def test_compact_divergence():
    K = sample_domain(Disk(), 200, seed=1, window=(-0.5, 0.5, -0.5, 0.5))
    K = K[np.abs(K) < 0.5]
    mob = compact_divergence_check(MapSpec.disk_mobius(0.5), K, K, 100)
    rot = compact_divergence_check(MapSpec.disk_rotation(1.0), K, K, 100)
    assert mob.divergent and mob.n0 >= 1
    assert not rot.divergent and str(rot) == "not divergent within 100"


def test_sample_domain_is_seeded_and_inside():
    a = sample_domain(Annulus(1), 50, seed=3)
    b = sample_domain(Annulus(1), 50, seed=3)
    assert np.array_equal(a, b) and len(a) == 50
    assert np.all(Annulus(1).contains(a))


@given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9), st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
def test_holomorphic_self_maps_do_not_expand(a, b, c, d):
    z, w = complex(a, b) * 0.7, complex(c, d) * 0.7
    for f in (MapSpec.disk_mobius(0.5), MapSpec.disk_mobius(0.3 - 0.4j, 1.0)):
        assert exact_distance(Disk(), f(z), f(w)) <= exact_distance(Disk(), z, w) + 1e-9


@given(st.floats(0.1, 5), st.floats(-3, 3), st.floats(0.1, 5), st.floats(-3, 3))
def test_affine_is_an_isometry(y1, x1, y2, x2):
    f = MapSpec.half_plane_affine(3.0, -1.0)
    z, w = complex(x1, y1), complex(x2, y2)
    assert exact_distance(HalfPlane(), f(z), f(w)) == pytest.approx(exact_distance(HalfPlane(), z, w), abs=1e-9)
