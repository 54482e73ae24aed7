import numpy as np
import pytest

from kobgeo import Annulus, Disk, PuncturedDisk, QueryError, density
from kobgeo.paths import Path
from kobgeo.visibility import (
    derivative_bound_violations,
    fit_log_growth,
    fit_power_law,
    goldilocks_report,
    m_function,
    visibility_experiment,
)

R = np.array([0.01, 0.05, 0.1, 0.2])


def test_m_function_disk_matches_closed_form():
    # 1/lambda = 1 - |z|^2 peaks on the collar edge at |z| = 1 - r
    t = m_function(Disk(), (1, 0.25), R)
    np.testing.assert_allclose(t.M, 2 * R - R ** 2, rtol=1e-9)
    assert np.all(np.diff(t.counts) >= 0)


def test_m_function_annulus_outer_circle():
    t = m_function(Annulus(1), (1, 0.25), R)
    expected = 1 / density(Annulus(1), 1 - R)
    np.testing.assert_allclose(t.M, expected, rtol=1e-6)


def test_m_table_lookup():
    t = m_function(Disk(), (1, 0.25), R)
    assert t.at(0.03) == t.M[1]
    assert np.isnan(t.at(0.5))


def test_power_law_fit_recovers_exponent():
    r = np.geomspace(1e-3, 1e-1, 10)
    alpha, C, resid = fit_power_law(r, 3 * r ** 0.7)
    assert alpha == pytest.approx(0.7) and C == pytest.approx(3) and resid < 1e-12
    assert fit_power_law(r[:2], r[:2]) == (None, None, None)


def test_log_growth_fit():
    d = np.geomspace(1e-6, 1e-1, 12)
    alpha, C, tail = fit_log_growth(d, 0.5 * np.log(1 / d) + 0.2)
    assert alpha == pytest.approx(0.5) and tail == pytest.approx(0.5) and C == pytest.approx(0.2)


def test_goldilocks_disk_and_annulus():
    for dom in (Disk(), Annulus(1)):
        rep = goldilocks_report(dom, 1 + 0j)
        assert rep.passed
        assert rep.alpha == pytest.approx(0.5, abs=0.05)
        assert rep.alpha_M == pytest.approx(1.0, abs=0.1)


def test_goldilocks_punctured_origin_is_inconclusive():
    rep = goldilocks_report(PuncturedDisk(), 0j)
    assert rep.verdict_1 == rep.verdict_2 == "inconclusive"
    assert rep.notes


def test_derivative_bound_on_geodesic():
    from kobgeo.oracle import exact_geodesic

    K, s = exact_geodesic(Disk(), 0, 0.99)
    t = np.linspace(0, K, 400)
    path = Path(t, s(t))
    table = m_function(Disk(), (1, 0.25), np.geomspace(1e-3, 0.25, 24))
    bad, worst = derivative_bound_violations(Disk(), path, 1.0, table, U=(1, 0.25))
    assert bad == 0 and worst < 0


def test_visibility_disk():
    v = visibility_experiment(Disk(), 1, -1, n=8, cert_n=21)
    assert v.stable and v.verdict == "visibility-consistent"
    assert v.sup < 0.01


def test_visibility_annulus():
    v = visibility_experiment(Annulus(1), 1, -1, n=8, cert_n=21)
    assert v.stable and v.verdict.startswith("visibility-consistent")
    assert all(c.verdict != "fail" for c in v.certificates)


def test_visibility_rejects_bad_targets():
    with pytest.raises(ValueError):
        visibility_experiment(Disk(), 1, 1)
    with pytest.raises(ValueError):
        visibility_experiment(Disk(), 1, 1j, radius=0.8)
    with pytest.raises(QueryError):
        visibility_experiment(Disk(), 1, -1, o=2)
