"""Acceptance criteria, each run at its stated tolerance.

A pass/fail line per criterion is printed in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from kobgeo import Annulus, Disk, HalfPlane, LatticeComplement, Strip, density, solve_density_pde
from kobgeo.dynamics import MapSpec, compact_divergence_check, orbit_report, record_times, sample_domain
from kobgeo.ends import (
    binary_tree_raster,
    branch_bijection,
    build_end_tree,
    count_ends,
    horizontal_strip_raster,
    lattice_end_raster,
)
from kobgeo.gromov import annulus_fatness, gromov_product, lattice_qi_experiment, rips_scan
from kobgeo.oracle import as_geometry, exact_distance, exact_geodesic
from kobgeo.paths import Path, construct_almost_geodesic, radial_almost_geodesic
from kobgeo.visibility import derivative_bound_violations, goldilocks_report, m_function

TRIALS = 10_000


def _random_triples(dom, n, rng, window=None):
    pts = sample_domain(dom, 3 * n, seed=int(rng.integers(1 << 31)), window=window)
    return [tuple(pts[3 * k:3 * k + 3]) for k in range(n)]


@pytest.mark.criterion(1, "annulus fatness gap equals -pi^2/(4s)")
def test_annulus_fatness(record):
    t0 = time.perf_counter()
    rows = annulus_fatness([0.5, 0.2, 0.1])
    elapsed = time.perf_counter() - t0
    for r in rows:
        assert r.predicted == pytest.approx(-math.pi ** 2 / (4 * r.s), rel=1e-12)
        assert r.rel_error <= 0.01
        assert r.c == pytest.approx(2 / math.pi, rel=1e-12)
        assert r.c_validation <= 1e-9
    gaps = [r.gap for r in rows]
    assert gaps[0] > gaps[1] > gaps[2]
    assert elapsed < 5.0
    record(f"max rel error {max(r.rel_error for r in rows):.1e}, {elapsed:.2f} s")


@pytest.mark.criterion(2, "raster distance Disk 0 -> 0.9 within 0.5% at h = 1/256")
def test_exact_vs_numeric_distance(record):
    t0 = time.perf_counter()
    raster = Disk().rasterize(1 / 256)
    geo = as_geometry(solve_density_pde(raster))
    K = geo.distance(0j, 0.9 + 0j)
    elapsed = time.perf_counter() - t0
    exact = math.atanh(0.9)
    assert exact == pytest.approx(1.472219, abs=1e-6)
    rel = abs(K - exact) / exact
    assert rel <= 0.005
    assert elapsed < 30.0
    record(f"K={K:.6f}, rel error {rel:.1e}, {elapsed:.1f} s")


@pytest.mark.criterion(3, "PDE density on Annulus(1) within 2% at h = 1/256")
def test_pde_density_annulus(record):
    t0 = time.perf_counter()
    A = Annulus(1.0)
    h = 1 / 256
    fld = solve_density_pde(A, h=h)
    elapsed = time.perf_counter() - t0
    z, lam = fld.grid_points()
    far = A.clearance(z) >= 10 * h
    exact = density(A, z[far])
    err = float(np.max(np.abs(lam[far] / exact - 1)))
    assert far.sum() > 1000
    assert err <= 0.02
    assert elapsed < 120.0
    record(f"max rel error {err:.2%} over {far.sum()} cells, {elapsed:.1f} s")


@pytest.mark.criterion(4, "Rips / four-point slack inequalities on Disk and Annulus(0.5)")
def test_rips_constants(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    kappa = 0.05
    out = []
    for dom in (Disk(), Annulus(0.5)):
        rep = rips_scan(dom, kappa, _random_triples(dom, 50, rng))
        assert len(rep.slim) == 50
        assert rep.slack_rips <= 1e-3
        assert rep.slack_hyp <= 1e-3
        assert rep.holds
        out.append(f"{dom.kind}: slim {rep.slim_max:.3f}, delta4 {rep.delta4:.3f}")
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    record(", ".join(out) + f", {elapsed:.1f} s")


@pytest.mark.criterion(5, "lattice delta growth and QI sandwich")
def test_lattice_non_hyperbolicity(record):
    t0 = time.perf_counter()
    rep = lattice_qi_experiment(R=8, radii=(2, 4, 8))
    elapsed = time.perf_counter() - t0
    d = [rep.deltas[R].delta for R in (2, 4, 8)]
    assert d[1] >= 1.10 * d[0] and d[2] >= 1.10 * d[1]
    assert rep.growth_ok
    assert rep.C1 > 0
    assert rep.sandwich_ok
    assert elapsed < 600.0
    record(f"delta {d[0]:.2f} / {d[1]:.2f} / {d[2]:.2f}, C1'={rep.C1:.3f}, C2={rep.C2:.3f}, {elapsed:.0f} s")


@pytest.mark.criterion(6, "Goldilocks diagnostics pass on Disk, Annulus and LatticeComplement")
def test_goldilocks(record):
    rep = goldilocks_report(Disk(), 1 + 0j)
    assert rep.passed
    assert rep.alpha == pytest.approx(0.5, abs=0.05)
    msgs = [f"disk alpha {rep.alpha:.3f}"]
    A = Annulus(1.0)
    for x in (1 + 0j, complex(A.inner_radius)):
        r = goldilocks_report(A, x)
        assert r.passed, (x, r.verdict_1, r.verdict_2)
        msgs.append(f"annulus alpha {r.alpha:.3f}")
    L = LatticeComplement(0.25)
    geo = as_geometry(L, h=1 / 256, window=(-0.5, 1.5, -0.5, 1.5))
    for x in (0.25 + 0j, 0.25j, 1 + 0.25 * np.exp(0.75j * np.pi)):
        r = goldilocks_report(geo, x, U=(x, 0.2))
        assert r.verdict_1 == "pass" and r.verdict_2 == "pass", (x, r.alpha_M, r.alpha, r.tail_slope)
        msgs.append(f"lattice alpha {r.alpha:.2f}")
    record(", ".join(msgs))


@pytest.mark.criterion(7, "radial almost-geodesic on the Disk certifies at lambda <= 2")
def test_radial_almost_geodesic(record):
    res = radial_almost_geodesic(Disk(), 1 + 0j, -1 + 0j, 1.0, 3.0, kappa=1e-3)
    cert = res.certificate
    assert cert.grid_n == 64
    assert cert.kappa <= 1e-3
    assert res.lam_hat <= 2.0
    assert cert.passed
    record(f"lambda_hat {res.lam_hat:.4f}")


@pytest.mark.criterion(8, "Wolff-Denjoy dichotomy")
def test_dynamics_dichotomy(record):
    rot = orbit_report(MapSpec.disk_rotation(1.0), [0j, 0.3, 0.5j], 500)
    assert rot.verdict == "relatively-compact"
    mob = orbit_report(MapSpec.disk_mobius(0.5), [0j, 0.3j, -0.5, 0.2 - 0.6j], 500)
    assert mob.verdict == "converges-to"
    assert mob.target.kind == "boundary point"
    pts = [t.point for t in mob.targets]
    assert all(abs(p - 1) <= 1e-6 for p in pts)
    assert max(abs(p - q) for p in pts for q in pts) <= 1e-6
    lat = orbit_report(MapSpec.lattice_translation(1), [0.5 + 0.5j, 0.5 - 0.5j], 500)
    assert lat.verdict == "converges-to"
    assert lat.target.kind == "end"
    tree = build_end_tree(lattice_end_raster(), (4, 8, 16))
    assert [c.label for c in tree.unbounded()] == [lat.target.end[1]]
    d = mob.d[0]
    nu = record_times(d)
    assert all(a < b for a, b in zip(nu, nu[1:]))
    naive = [i + 1 for i in range(len(d)) if all(d[i] > d[j] for j in range(i))]
    assert list(nu) == naive
    record(f"Mobius limit {pts[0]:.9f}, {len(nu)} record times")


@pytest.mark.criterion(9, "end counts and exhaustion independence")
def test_end_trees(record):
    cases = [
        ("disk", Disk(), (2, 4), {"h": 1 / 16}, 0),
        ("strip", horizontal_strip_raster(), (2, 4, 8), {}, 2),
        ("lattice", lattice_end_raster(), (4, 8, 16), {}, 1),
        ("tree", binary_tree_raster(depth=5), (1.5, 3, 6, 12, 20), {}, 32),
    ]
    out = []
    for name, dom, radii, kw, expected in cases:
        a = build_end_tree(dom, radii, **kw)
        b = build_end_tree(dom, tuple(2 * r for r in radii), **kw)
        assert count_ends(a) == expected, name
        assert count_ends(b) == expected, name
        ok, _ = branch_bijection(a, b)
        assert ok, name
        out.append(f"{name} {count_ends(a)}")
    record(", ".join(out))


@pytest.mark.criterion(10, "invariant suites over 10^4 seeded trials")
def test_invariant_suites(record):
    rng = np.random.default_rng(0)
    violations = {}

    # Schwarz-Pick monotonicity for nested pairs
    pairs = [
        (Disk(1.5j, 1.0), HalfPlane()),
        (Disk(-0.5 + 0j, 0.5), Strip(1.0)),
        (Annulus(0.5), Annulus(1.0)),
        (Disk(), Disk(0j, 2.0)),
    ]
    bad = 0
    for small, big in pairs:
        z = sample_domain(small, TRIALS, seed=int(rng.integers(1 << 31)))
        bad += int(np.sum(density(small, z) < density(big, z) * (1 - 1e-12)))
    violations["schwarz-pick"] = bad

    # triangle inequality
    bad = 0
    for dom, win in ((Disk(), None), (Annulus(0.5), None), (Strip(1.0), (-1, 0, -3, 3)), (HalfPlane(), (-3, 3, 0, 3))):
        p = sample_domain(dom, 3 * TRIALS, seed=int(rng.integers(1 << 31)), window=win).reshape(3, -1)
        a, b, c = p
        dab, dbc, dac = exact_distance(dom, a, b), exact_distance(dom, b, c), exact_distance(dom, a, c)
        bad += int(np.sum(dac > dab + dbc + 1e-9))
    violations["triangle"] = bad

    # product bound (sigma(0)|sigma(T))_z <= K(z, sigma) + 3 kappa / 2
    kappa = 0.05
    bad = 0
    for dom in (Disk(), Annulus(0.5)):
        ends = sample_domain(dom, 2 * 100, seed=int(rng.integers(1 << 31))).reshape(2, -1)
        zs = sample_domain(dom, 100 * 50, seed=int(rng.integers(1 << 31))).reshape(100, 50)
        for (u, v), z in zip(ends.T, zs):
            path, cert = construct_almost_geodesic(dom, u, v, kappa, n=16)
            assert cert.verdict == "pass"
            knots = path.z
            Dz = exact_distance(dom, z[:, None], knots[None, :])
            prod = 0.5 * (exact_distance(dom, z, u) + exact_distance(dom, z, v) - exact_distance(dom, u, v))
            bad += int(np.sum(prod > Dz.min(axis=1) + 1.5 * kappa + 1e-9))
    violations["product bound"] = bad

    # derivative bound |sigma'| <= lam M(delta(sigma)) + tol inside U
    bad = 0
    checked = 0
    for dom, x in ((Disk(), 1 + 0j), (Annulus(1.0), 1 + 0j)):
        U = (x, 0.25)
        table = m_function(dom, U, np.geomspace(1e-4, 0.25, 200))
        target = checked + TRIALS // 2
        while checked < target:
            w = x * (1 - 0.2 * rng.uniform(0.05, 1)) * np.exp(1j * rng.uniform(-0.1, 0.1))
            z = x * (1 - 0.2 * rng.uniform(0.05, 1)) * np.exp(1j * rng.uniform(-0.1, 0.1))
            path, _ = construct_almost_geodesic(dom, z, w, 0.05, n=8, certify_path=False)
            idx = np.unique(np.linspace(0, len(path) - 1, 201).round().astype(int))
            sub = Path(path.t[idx], path.z[idx])
            n_bad, _ = derivative_bound_violations(dom, sub, 1.0, table, tol=1e-6, U=U)
            bad += n_bad
            checked += len(idx) - 1
    violations["derivative bound"] = bad

    # 1-Lipschitz dynamics
    bad = 0
    maps = [MapSpec.disk_mobius(0.5), MapSpec.disk_mobius(0.3 - 0.4j, 1.0), MapSpec.disk_rotation(1.0),
            MapSpec.annulus_rotation(0.7, 1.0), MapSpec.half_plane_affine(2.0, 1.0)]
    for fmap in maps:
        win = (-5, 5, 0, 5) if isinstance(fmap.domain, HalfPlane) else None
        p = sample_domain(fmap.domain, 2 * TRIALS // len(maps), seed=int(rng.integers(1 << 31)), window=win)
        z, w = p.reshape(2, -1)
        before = exact_distance(fmap.domain, z, w)
        after = exact_distance(fmap.domain, fmap(z), fmap(w))
        bad += int(np.sum(after > before + 1e-9 * (1 + before)))
    violations["1-Lipschitz"] = bad

    assert checked >= TRIALS
    assert all(v == 0 for v in violations.values()), violations
    record(", ".join(f"{k} {v}" for k, v in violations.items()))
