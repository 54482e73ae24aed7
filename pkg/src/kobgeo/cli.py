"""Scenario runner and command-line front end.

A scenario is a JSON object::

    {"domain": {"kind": "annulus", "s": 1},
     "experiments": [{"name": "distance", "params": {"pairs": [["0.5", "-0.5"]]}}],
     "output_dir": "out", "seed": 0, "tolerances": {}}

Each experiment writes one CSV (plus optional SVG/PGM/text artifacts) and
``manifest.txt`` lists every file with its sha256 and the config hash.
Exit status: 0 success, 1 configuration error, 2 experiment error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from kobgeo import constants
from kobgeo.domains import build_domain, parse_complex
from kobgeo.errors import ConfigError, KobgeoError
from kobgeo.io import write_csv, write_heatmap_pgm, write_mask_pgm

log = logging.getLogger("kobgeo")

__all__ = ["main", "run_scenario", "load_config", "ScenarioConfig", "EXPERIMENTS"]

CONFIG_KEYS = {"domain", "experiments", "output_dir", "seed", "tolerances"}
EXPERIMENT_KEYS = {"name", "params"}
TOLERANCE_DEFAULTS = {
    "pde_tolerance": constants.PDE_TOLERANCE,
    "cert_grid": constants.CERT_GRID,
    "rips_tolerance": 1e-3,
}


@dataclass
class ScenarioConfig:
    domain: object
    experiments: list
    output_dir: Path
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    sha256: str = ""


@dataclass
class Output:
    header: list
    rows: list
    summary: list = field(default_factory=list)
    extra: list = field(default_factory=list)  # (suffix, writer(path) -> path or None)


# --------------------------------------------------------------------------
# experiments


def _need_domain(cfg):
    if cfg.domain is None:
        raise ConfigError("this experiment needs a 'domain'")
    return cfg.domain


def _points(values):
    return np.array([parse_complex(v) for v in values], dtype=complex)


def _geometry(cfg, h=None):
    from kobgeo.oracle import as_geometry

    dom = _need_domain(cfg)
    if dom.exact:
        return as_geometry(dom)
    from kobgeo.metric import solve_density_pde

    fld = solve_density_pde(dom, h=h, tolerance=cfg.tolerances["pde_tolerance"])
    return as_geometry(fld)


def exp_density(cfg, points=None, grid=32, h=None):
    """(x, y, lambda) at listed points, or on a grid over the default window."""
    geo = _geometry(cfg, h)
    dom = geo.domain
    extra = []
    if points is not None:
        z = _points(points)
    else:
        x0, x1, y0, y1 = dom.default_window()
        xs = np.linspace(x0, x1, int(grid) + 2)[1:-1]
        ys = np.linspace(y0, y1, int(grid) + 2)[1:-1]
        zz = xs[None, :] + 1j * ys[:, None]
        inside = np.asarray(dom.contains(zz), dtype=bool)
        vals = np.full(zz.shape, np.nan)
        vals[inside] = np.log(geo.density(zz[inside]))
        extra.append(("log_density.pgm", lambda p, v=vals, m=inside: write_heatmap_pgm(p, v, m)))
        z = zz[inside]
    lam = np.atleast_1d(geo.density(z))
    rows = [(q.real, q.imag, v) for q, v in zip(z, lam)]
    return Output(["x", "y", "lambda"], rows, [f"{len(rows)} density values"], extra)


def exp_distance(cfg, pairs, h=None):
    geo = _geometry(cfg, h)
    rows = []
    for a, b in pairs:
        z, w = parse_complex(a), parse_complex(b)
        K, err = geo.distance_with_error(z, w)
        rows.append((z.real, z.imag, w.real, w.imag, K, err))
    return Output(["zx", "zy", "wx", "wy", "K", "error"], rows, [f"{len(rows)} distances"])


def exp_geodesic(cfg, pairs, kappa=1e-3, h=None):
    from kobgeo import plotting
    from kobgeo.paths import construct_almost_geodesic

    geo = _geometry(cfg, h)
    n = int(cfg.tolerances["cert_grid"])
    rows, curves, summary = [], [], []
    for k, (a, b) in enumerate(pairs):
        path, cert = construct_almost_geodesic(geo, parse_complex(a), parse_complex(b), float(kappa), n=n)
        for t, x, y in path.rows():
            rows.append((k, t, x, y))
        curves.append(path.z)
        summary.append(f"path {k}: length {path.span:.6f}, certificate {cert.verdict} "
                       f"(max violation {cert.max_violation:.3e}, speed {cert.max_speed:.6f})")
    extra = [("paths.svg", lambda p: plotting.plot_paths(p, geo.domain, curves, "almost-geodesics"))]
    return Output(["path", "t", "x", "y"], rows, summary, extra)


def exp_delta(cfg, points=None, sample=None, h=None):
    from kobgeo.dynamics import sample_domain
    from kobgeo.gromov import four_point_delta

    geo = _geometry(cfg, h)
    if points is not None:
        pts = _points(points)
    elif sample is not None:
        pts = sample_domain(geo.domain, int(sample), seed=cfg.seed)
    else:
        raise ConfigError("delta needs 'points' or 'sample'")
    D, _ = geo.distance_matrix(pts)
    rep = four_point_delta(D, pts)
    rows = [(rep.n, rep.delta)]
    summary = [f"delta4 = {rep.delta:.6f} over {rep.n} points"]
    if rep.witness is not None:
        w = rep.witness
        summary.append(f"witness (a, b, c, o) = {tuple(complex(p) for p in w.points)}")
    return Output(["n", "delta"], rows, summary)


def exp_goldilocks(cfg, x, radius=0.25, h=None):
    from kobgeo import plotting
    from kobgeo.visibility import goldilocks_report

    geo = _geometry(cfg, h)
    rep = goldilocks_report(geo, parse_complex(x), U=(parse_complex(x), float(radius)))
    rows = [("M", r, m) for r, m in rep.m_table.rows()]
    rows += [("K", d, k) for d, k in zip(rep.deltas, rep.distances)]
    summary = [f"condition 1: {rep.verdict_1} (alpha_M={rep.alpha_M}, residual={rep.fit_residual})",
               f"condition 2: {rep.verdict_2} (alpha={rep.alpha}, C={rep.C}, tail slope={rep.tail_slope})"]
    summary += rep.notes
    extra = [("m_table.svg", lambda p: plotting.plot_table(p, rep.m_table.r, rep.m_table.M, "r", "M(r)",
                                                           "collar supremum of 1/lambda", logx=True, logy=True))]
    return Output(["table", "r_or_delta", "value"], rows, summary, extra)


def exp_visibility(cfg, xi, eta, radius=0.25, kappa=0.05, n=12, o=None, h=None):
    from kobgeo import plotting
    from kobgeo.visibility import visibility_experiment

    geo = _geometry(cfg, h)
    rep = visibility_experiment(geo, parse_complex(xi), parse_complex(eta), radius=float(radius),
                                kappa=float(kappa), n=int(n), o=None if o is None else parse_complex(o),
                                keep_paths=True, cert_n=int(cfg.tolerances["cert_grid"]))
    rows = [(i + 1, m) for i, m in enumerate(rep.m)]
    summary = [f"base point o = {rep.o}", f"sup m_i = {rep.sup:.6f}", f"verdict: {rep.verdict}"]
    curves = [p.z for p in rep.paths]
    extra = [("bundle.svg", lambda p: plotting.plot_paths(p, geo.domain, curves, "almost-geodesic bundle",
                                                          points=[rep.o]))]
    return Output(["i", "m_i"], rows, summary, extra)


def exp_ends(cfg, radii, h=0.125, window=None):
    from kobgeo import plotting
    from kobgeo.ends import build_end_tree, count_ends

    dom = _need_domain(cfg)
    tree = build_end_tree(dom, radii, h=float(h), window=None if window is None else tuple(window))
    summary = [f"ends at depth {tree.depth}: {count_ends(tree)}"] + tree.notes
    extra = [("outline.txt", lambda p: _write_text(p, tree.outline() + "\n")),
             ("mask.pgm", lambda p: write_mask_pgm(p, tree.raster)),
             ("ends.svg", lambda p: plotting.plot_end_tree(p, tree, "deepest-level components"))]
    return Output(["level", "component", "parent", "bounded", "cells"], tree.rows(), summary, extra)


def exp_orbit(cfg, map, base_points, N=500):  # noqa: A002 - config key
    from kobgeo import plotting
    from kobgeo.dynamics import MapSpec, orbit_report

    fmap = MapSpec.from_config(map)
    rep = orbit_report(fmap, [parse_complex(b) for b in base_points], int(N))
    rows = []
    for k in range(len(rep.base_points)):
        rows += [(k,) + r for r in rep.rows(k)]
    tgt = rep.target
    summary = [f"verdict: {rep.verdict}"]
    if tgt is not None:
        summary.append(f"target: {tgt.kind} {tgt.end if tgt.kind == 'end' else tgt.point}")
    summary.append(f"record times (base 0): {rep.records[0][:20]}")
    summary += rep.notes
    extra = [("orbit.svg", lambda p: plotting.plot_orbit(p, fmap.domain, rep.orbits[0], f"{fmap.kind} orbit",
                                                         window=_orbit_window(fmap, rep.orbits[0])))]
    return Output(["base", "n", "x", "y", "d_n"], rows, summary, extra)


def _orbit_window(fmap, z):
    if fmap.domain.kind in ("disk", "annulus"):
        return None
    x0, x1 = min(z.real.min(), -1) - 1, max(z.real.max(), 1) + 1
    y0, y1 = min(z.imag.min(), -1) - 1, max(z.imag.max(), 1) + 1
    return (x0, x1, y0, y1)


def exp_fatness(cfg, s_values=(0.5, 0.2, 0.1)):
    from kobgeo import plotting
    from kobgeo.gromov import annulus_fatness

    rows = annulus_fatness(s_values)
    out = [(r.s, r.gap, r.predicted) for r in rows]
    summary = [f"s={r.s:g}: gap {r.gap:.6f}, predicted {r.predicted:.6f}, c={r.c:.6f}" for r in rows]
    extra = [("fatness.svg", lambda p: plotting.plot_table(p, [r.s for r in rows], [[r.gap for r in rows],
                                                           [r.predicted for r in rows]], "s", "gap",
                                                           "witness gap", labels=["computed", "predicted"]))]
    return Output(["s", "gap", "predicted"], out, summary, extra)


def exp_lattice_qi(cfg, radii=(2, 4, 8), z0="0.5+0.5j", r=0.25, pde_h=1 / 32, graph_h=1 / 16):
    from kobgeo.gromov import lattice_qi_experiment

    rep = lattice_qi_experiment(R=max(radii), z0=parse_complex(z0), r=float(r), radii=tuple(radii),
                                pde_h=float(pde_h), graph_h=float(graph_h))
    rows = [(R, rep.deltas[R].delta) for R in sorted(rep.deltas)]
    summary = [f"C1' = {rep.C1:.6f}, C2 = {rep.C2:.6f}, sandwich {'holds' if rep.sandwich_ok else 'fails'}",
               f"delta growth {'>= 10% per step' if rep.growth_ok else 'below threshold'}"]
    return Output(["R", "delta"], rows, summary)


EXPERIMENTS = {
    "density": exp_density,
    "distance": exp_distance,
    "geodesic": exp_geodesic,
    "delta": exp_delta,
    "goldilocks": exp_goldilocks,
    "visibility": exp_visibility,
    "ends": exp_ends,
    "orbit": exp_orbit,
    "fatness": exp_fatness,
    "lattice_qi": exp_lattice_qi,
}


def _param_names(fn):
    import inspect

    sig = inspect.signature(fn)
    names = list(sig.parameters)[1:]
    required = {k for k in names if sig.parameters[k].default is inspect.Parameter.empty}
    return set(names), required


def _write_text(path, text):
    Path(path).write_text(text, encoding="utf-8", newline="\n")
    return Path(path)


# --------------------------------------------------------------------------
# config


def load_config(source, base_dir=None) -> ScenarioConfig:
    """Parse and validate a scenario (path, JSON text or dict)."""
    if isinstance(source, dict):
        raw = json.dumps(source, sort_keys=True)
        data = source
    else:
        p = Path(source)
        try:
            raw = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        base_dir = base_dir or p.parent
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key {unknown[0]!r}")
    exps = data.get("experiments", [])
    if not isinstance(exps, list):
        raise ConfigError("'experiments' must be a list")
    for k, e in enumerate(exps):
        if not isinstance(e, dict) or "name" not in e:
            raise ConfigError(f"experiment {k} must be an object with a 'name'")
        bad = sorted(set(e) - EXPERIMENT_KEYS)
        if bad:
            raise ConfigError(f"experiment {k}: unknown key {bad[0]!r}")
        name = e["name"]
        if name not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment name {name!r}")
        params = e.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError(f"experiment {name!r}: 'params' must be an object")
        allowed, required = _param_names(EXPERIMENTS[name])
        extra = sorted(set(params) - allowed)
        if extra:
            raise ConfigError(f"experiment {name!r}: unknown parameter {extra[0]!r}")
        missing = sorted(required - set(params))
        if missing:
            raise ConfigError(f"experiment {name!r}: missing parameter {missing[0]!r}")
    tol = data.get("tolerances", {}) or {}
    if not isinstance(tol, dict):
        raise ConfigError("'tolerances' must be an object")
    bad = sorted(set(tol) - set(TOLERANCE_DEFAULTS))
    if bad:
        raise ConfigError(f"unknown tolerance {bad[0]!r}")
    tolerances = {**TOLERANCE_DEFAULTS, **tol}
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("'seed' must be an integer")
    dom = None
    if data.get("domain") is not None:
        try:
            dom = build_domain(data["domain"])
        except (KobgeoError, ValueError, TypeError) as exc:
            raise ConfigError(f"domain: {exc}") from None
    out = Path(data.get("output_dir", "kobgeo_out"))
    if not out.is_absolute() and base_dir is not None:
        out = Path(base_dir) / out
    digest = hashlib.sha256(raw.encode("utf-8")).hexdigest()
    return ScenarioConfig(dom, exps, out, seed, tolerances, digest)


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_scenario(source, out=None, quiet=False):
    """Run every experiment in order.  Returns (exit status, manifest path)."""
    try:
        cfg = load_config(source)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1, None
    if out is not None:
        cfg.output_dir = Path(out)
    try:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"config error: output directory: {exc}", file=sys.stderr)
        return 1, None
    np.random.seed(cfg.seed)
    lines = [f"config_sha256 {cfg.sha256}"]
    status = 0
    emit = (lambda s: None) if quiet else print
    for k, e in enumerate(cfg.experiments):
        name = e["name"]
        stem = f"{k:02d}_{name}"
        emit(f"===== {stem} =====")
        try:
            res = EXPERIMENTS[name](cfg, **e.get("params", {}))
        except ConfigError as exc:
            print(f"config error in {name}: {exc}", file=sys.stderr)
            lines.append(f"FAILED {stem} config: {exc}")
            status = max(status, 2)
            continue
        except Exception as exc:  # noqa: BLE001 - recorded in the manifest
            log.debug("experiment failed", exc_info=True)
            print(f"experiment error in {name}: {exc}", file=sys.stderr)
            lines.append(f"FAILED {stem} {type(exc).__name__}: {exc}")
            status = 2
            continue
        csv_path = write_csv(cfg.output_dir / f"{stem}.csv", res.header, res.rows)
        lines.append(f"{csv_path.name} {_sha256(csv_path)}")
        for s in res.summary:
            emit(s)
        for suffix, writer in res.extra:
            target = cfg.output_dir / f"{stem}_{suffix}"
            try:
                written = writer(target)
            except Exception as exc:  # noqa: BLE001
                lines.append(f"NOTE {target.name} skipped: {exc}")
                continue
            if written is None:
                lines.append(f"NOTE {target.name} skipped: nothing to plot")
            else:
                lines.append(f"{target.name} {_sha256(target)}")
        emit(f"----- {stem}: {len(res.rows)} rows -----")
    manifest = cfg.output_dir / "manifest.txt"
    _write_text(manifest, "\n".join(lines) + "\n")
    return status, manifest


# --------------------------------------------------------------------------
# command line


def _json_arg(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _common(p, domain=True):
    if domain:
        p.add_argument("--domain", type=_json_arg, required=True,
                       help='domain spec as JSON, e.g. \'{"kind": "annulus", "s": 1}\'')
    p.add_argument("--out", default="kobgeo_out", help="output directory")
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    ap = argparse.ArgumentParser(prog="kobgeo", description="Kobayashi geometry of planar domains.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario config")
    p.add_argument("config")
    p.add_argument("--out", default=None, help="override output_dir")

    p = sub.add_parser("density", help="density values")
    _common(p)
    p.add_argument("--points", nargs="*", default=None)
    p.add_argument("--grid", type=int, default=32)
    p.add_argument("--h", type=float, default=None)

    p = sub.add_parser("distance", help="distances between point pairs")
    _common(p)
    p.add_argument("--pair", nargs=2, action="append", required=True, metavar=("Z", "W"))
    p.add_argument("--h", type=float, default=None)

    p = sub.add_parser("geodesic", help="certified almost-geodesics")
    _common(p)
    p.add_argument("--pair", nargs=2, action="append", required=True, metavar=("Z", "W"))
    p.add_argument("--kappa", type=float, default=1e-3)
    p.add_argument("--h", type=float, default=None)

    p = sub.add_parser("delta", help="four-point delta")
    _common(p)
    p.add_argument("--points", nargs="*", default=None)
    p.add_argument("--sample", type=int, default=None)

    p = sub.add_parser("visibility", help="visibility experiment")
    _common(p)
    p.add_argument("--xi", required=True)
    p.add_argument("--eta", required=True)
    p.add_argument("--radius", type=float, default=0.25)
    p.add_argument("--kappa", type=float, default=0.05)
    p.add_argument("-n", type=int, default=12)

    p = sub.add_parser("ends", help="end tree")
    _common(p)
    p.add_argument("--radii", type=float, nargs="+", required=True)
    p.add_argument("--h", type=float, default=0.125)

    p = sub.add_parser("orbit", help="orbit classification")
    _common(p, domain=False)
    p.add_argument("--map", type=_json_arg, required=True, help='e.g. \'{"kind": "disk_mobius", "a": 0.5}\'')
    p.add_argument("--base", nargs="+", required=True)
    p.add_argument("-N", type=int, default=500)

    p = sub.add_parser("fatness", help="thin-annulus witness gaps")
    _common(p, domain=False)
    p.add_argument("--s", type=float, nargs="+", default=[0.5, 0.2, 0.1])

    p = sub.add_parser("lattice-qi", help="lattice quasi-isometry experiment")
    _common(p, domain=False)
    p.add_argument("--radii", type=int, nargs="+", default=[2, 4, 8])
    p.add_argument("--pde-h", type=float, default=1 / 32)
    p.add_argument("--graph-h", type=float, default=1 / 16)
    return ap


def _config_from_args(a):
    """Turn a subcommand into a one-experiment scenario."""
    dom = getattr(a, "domain", None)
    if a.command == "density":
        name, params = "density", {"points": a.points, "grid": a.grid, "h": a.h}
    elif a.command == "distance":
        name, params = "distance", {"pairs": a.pair, "h": a.h}
    elif a.command == "geodesic":
        name, params = "geodesic", {"pairs": a.pair, "kappa": a.kappa, "h": a.h}
    elif a.command == "delta":
        name, params = "delta", {"points": a.points, "sample": a.sample}
    elif a.command == "visibility":
        name, params = "visibility", {"xi": a.xi, "eta": a.eta, "radius": a.radius, "kappa": a.kappa, "n": a.n}
    elif a.command == "ends":
        name, params = "ends", {"radii": a.radii, "h": a.h}
    elif a.command == "orbit":
        name, params = "orbit", {"map": a.map, "base_points": a.base, "N": a.N}
    elif a.command == "fatness":
        name, params = "fatness", {"s_values": a.s}
    else:
        name, params = "lattice_qi", {"radii": a.radii, "pde_h": a.pde_h, "graph_h": a.graph_h}
    params = {k: v for k, v in params.items() if v is not None}
    return {"domain": dom, "experiments": [{"name": name, "params": params}],
            "output_dir": str(a.out), "seed": a.seed}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        status, manifest = run_scenario(args.config, out=args.out)
    else:
        status, manifest = run_scenario(_config_from_args(args))
    if manifest is not None:
        print(f"manifest: {manifest}")
    return status


if __name__ == "__main__":
    sys.exit(main())
