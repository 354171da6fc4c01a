"""Command-line driver: solve | energy | verify | recover | relax.

Each command reads a JSON config (``--config``), applies flag overrides,
and writes its artifacts under ``<out>/<command>/<name>/`` together with a
manifest recording the fully resolved configuration.  All randomness is
seeded; rerunning an identical config + seed reproduces the output files
bit for bit (``--sequential`` additionally pins the NumPy kernel backend, so
results do not depend on whether the compiled extension is present).

Exit codes: 0 success; 2 config/input validation failure; 3 solver or
relaxation did not converge (or stalled); 4 verification checks failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .electrostatics import ChargeSet
from .energy_identities import (
    complete_energy,
    greens_first_identity_residual,
    recover_surface_density,
    recover_volume_density,
)
from .errors import PotkitError, Stalled
from .geometry import (
    Ball,
    Box,
    ScalarField,
    build_grid,
    field_from_csv,
    field_to_csv,
    grid_from_json,
    grid_to_json,
    mesh_to_csv,
    normal_probe_points,
    panelize,
)
from .potential_fields import DensityField, mutual_energy, total_energy
from .relaxation import RelaxationConfig, relax
from .variational import BoundaryData, solve

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3
EXIT_CHECKS_FAILED = 4


class ConfigError(Exception):
    """Invalid configuration or input file (exit code 2)."""


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _domain_from_spec(spec):
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"domain spec must be an object with 'kind', got {spec!r}")
    kind = spec["kind"]
    try:
        if kind == "box":
            return Box(spec["lo"], spec["hi"])
        if kind == "ball":
            return Ball(spec.get("center", [0.0, 0.0, 0.0]), spec["radius"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad domain spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown domain kind {kind!r}")


def _positive(cfg, key, default=None):
    v = cfg.get(key, default)
    if v is None or not float(v) > 0.0:
        raise ConfigError(f"{key} must be positive, got {v!r}")
    return float(v)


def _nonnegative(cfg, key, default=0.0):
    v = float(cfg.get(key, default))
    if v < 0.0:
        raise ConfigError(f"{key} must be nonnegative, got {v}")
    return v


def _outdir(args, command):
    name = args.name or "run"
    out = Path(args.out) / command / name
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(outdir, command, config, args):
    manifest = {
        "command": command,
        "potkit_version": __version__,
        "kernel_backend": kernels.backend_name(),
        "seed": args.seed,
        "config": config,
    }
    with open(outdir / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

_BUILTIN_BOUNDARY = {
    "linear": lambda x, y, z: x,
    "quadratic_harmonic": lambda x, y, z: x**2 - y**2,
}


def _boundary_data(grid, spec, padded_lo, padded_hi):
    kind = spec.get("kind", "linear")
    if kind in _BUILTIN_BOUNDARY:
        return BoundaryData.from_function(grid, _BUILTIN_BOUNDARY[kind])
    if kind == "external_pole":
        pole = np.asarray(spec.get("pole", [2.0, 2.0, 2.0]), dtype=np.float64)
        inside = np.all(pole >= padded_lo) and np.all(pole <= padded_hi)
        if inside:
            raise ConfigError(f"external_pole position {pole.tolist()} lies inside the padded box")

        def pole_fn(x, y, z):
            return 1.0 / np.sqrt((x - pole[0]) ** 2 + (y - pole[1]) ** 2 + (z - pole[2]) ** 2)

        return BoundaryData.from_function(grid, pole_fn)
    if kind == "csv":
        path = spec.get("path")
        if not path:
            raise ConfigError("boundary kind 'csv' requires 'path'")
        table = {}
        try:
            with open(path) as f:
                reader = csv.DictReader(f)
                for row in reader:
                    key = (int(row["i"]), int(row["j"]), int(row["k"]))
                    table[key] = float(row["value"])
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"bad boundary CSV {path}: {exc}") from exc
        values = np.empty(grid.n_boundary)
        for pos, idx in enumerate(grid.boundary_indices()):
            key = tuple(int(v) for v in idx)
            if key not in table:
                raise ConfigError(f"boundary CSV {path} is missing boundary node {key}")
            values[pos] = table[key]
        if not np.all(np.isfinite(values)):
            raise ConfigError(f"boundary CSV {path} contains non-finite values")
        return BoundaryData(grid, values)
    raise ConfigError(f"unknown boundary kind {kind!r}")


def cmd_solve(args):
    cfg = _load_config(args.config)
    if args.h is not None:
        cfg["h"] = args.h
    if args.tol is not None:
        cfg["tol"] = args.tol
    domain = _domain_from_spec(cfg.get("domain", {"kind": "box", "lo": [0, 0, 0], "hi": [1, 1, 1]}))
    h = _positive(cfg, "h", 0.1)
    padding = _nonnegative(cfg, "padding", 0.0)
    tol = _positive(cfg, "tol", 1e-10)
    max_iter = cfg.get("max_iter")
    if max_iter is not None:
        max_iter = int(max_iter)
        if max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {max_iter}")

    grid = build_grid(domain, h, padding)
    lo, hi = domain.bounds()
    f = _boundary_data(grid, cfg.get("boundary", {"kind": "linear"}), lo - padding, hi + padding)

    result = solve(grid, f, tol=tol, max_iter=max_iter)

    outdir = _outdir(args, "solve")
    _write_manifest(outdir, "solve", cfg, args)
    grid_to_json(grid, outdir / "grid.json")
    field_to_csv(result.field, outdir / "field.csv")
    with open(outdir / "result.json", "w") as fjson:
        json.dump(
            {
                "converged": result.converged,
                "iterations": result.iterations,
                "dirichlet_energy": result.dirichlet_energy,
                "harmonicity_residual": result.harmonicity_residual,
                "interior_nodes": grid.n_interior,
                "boundary_nodes": grid.n_boundary,
            },
            fjson,
            indent=2,
        )
    print(f"solve: converged={result.converged} iterations={result.iterations} "
          f"D={result.dirichlet_energy:.12g} artifacts in {outdir}")
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


# ---------------------------------------------------------------------------
# energy
# ---------------------------------------------------------------------------


def _density_field(cfg, grid):
    spec = cfg.get("rho", {"kind": "zero"})
    kind = spec.get("kind", "zero")
    if kind == "zero":
        return ScalarField.zeros(grid)
    if kind == "uniform_ball":
        ball = Ball(spec.get("center", [0.0, 0.0, 0.0]), spec.get("radius", 1.0))
        value = float(spec.get("value", 1.0))
        X, Y, Z = grid.meshgrid()
        pts = np.stack([X, Y, Z], axis=-1)
        return ScalarField(grid, value * ball.contains(pts, strict=True))
    if kind == "csv":
        field = field_from_csv(grid, spec["path"])
        if not np.all(np.isfinite(field.values)):
            raise ConfigError(f"density CSV {spec['path']} contains non-finite values")
        return field
    raise ConfigError(f"unknown rho kind {kind!r}")


def _sigma_values(cfg, mesh):
    spec = cfg.get("sigma", {"kind": "uniform", "value": 1.0})
    kind = spec.get("kind", "uniform")
    if kind == "uniform":
        return np.full(mesh.n_panels, float(spec.get("value", 1.0)))
    if kind == "csv":
        data = np.loadtxt(spec["path"], delimiter=",", skiprows=1, ndmin=2)
        vals = data[:, -1]
        if len(vals) != mesh.n_panels:
            raise ConfigError(
                f"sigma CSV has {len(vals)} rows for {mesh.n_panels} panels"
            )
        if not np.all(np.isfinite(vals)):
            raise ConfigError(f"sigma CSV {spec['path']} contains non-finite values")
        return vals
    raise ConfigError(f"unknown sigma kind {kind!r}")


def cmd_energy(args):
    cfg = _load_config(args.config)
    if args.h is not None:
        cfg["h"] = args.h
    if args.panels is not None:
        cfg["panels"] = args.panels
    domain = _domain_from_spec(cfg.get("domain", {"kind": "ball", "radius": 1.0}))
    panels = int(cfg.get("panels", 20))
    if panels < 1:
        raise ConfigError(f"panels must be >= 1, got {panels}")
    h = _positive(cfg, "h", 0.1)
    padding = _nonnegative(cfg, "padding", 0.0)

    grid = build_grid(domain, h, padding)
    mesh = panelize(domain, panels)
    dens = DensityField(volume=_density_field(cfg, grid), surface=_sigma_values(cfg, mesh))

    report = total_energy(dens.volume, mesh, dens.surface)
    outdir = _outdir(args, "energy")
    _write_manifest(outdir, "energy", cfg, args)
    report.to_json(outdir / "energy.json")
    mesh_to_csv(mesh, outdir / "mesh.csv")
    print(f"energy: total={report.total:.12g} (volume_self={report.volume_self:.6g}, "
          f"surface_self={report.surface_self:.6g}, mutual={report.mutual:.6g}) "
          f"artifacts in {outdir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

_DEFAULT_VERIFY_TOL = {
    "green_residual": 0.02,
    "green_decay": 1.5,
    "mutual_gap": 0.02,
    "chain_gap": 0.08,
    "poisson_volume": 1e-10,
    "poisson_surface": 0.02,
}


def _bump_field(grid, radius=0.6):
    def fn(x, y, z):
        r2 = (x**2 + y**2 + z**2) / radius**2
        return np.where(r2 < 1.0, (1.0 - r2) ** 3, 0.0)

    return ScalarField.from_function(grid, fn)


def cmd_verify(args):
    cfg = _load_config(args.config)
    if args.h is not None:
        cfg["h"] = args.h
    if args.panels is not None:
        cfg["panels"] = args.panels
    h = _positive(cfg, "h", 0.1)
    panels = int(cfg.get("panels", 20))
    tols = dict(_DEFAULT_VERIFY_TOL)
    user_tols = cfg.get("tolerances", {})
    unknown = set(user_tols) - set(tols)
    if unknown:
        raise ConfigError(f"unknown tolerance keys {sorted(unknown)}")
    tols.update({k: float(v) for k, v in user_tols.items()})

    outdir = _outdir(args, "verify")
    _write_manifest(outdir, "verify", cfg, args)
    checks = []  # (name, value, tolerance, passed, comparator)

    # Green's first identity residual study on the unit cube, A=x^2, B=y^2.
    cube = Box([0, 0, 0], [1, 1, 1])
    study = []
    for hh in (h, h / 2):
        g = build_grid(cube, hh, 0.0)
        a = ScalarField.from_function(g, lambda x, y, z: x**2)
        b = ScalarField.from_function(g, lambda x, y, z: y**2)
        r = greens_first_identity_residual(a, b)
        study.append((hh, r.lhs, r.rhs, r.residual))
    _write_csv(outdir / "green_study.csv", ["h", "lhs", "rhs", "residual"], study)
    res_coarse, res_fine = abs(study[0][3]), abs(study[1][3])
    checks.append(("green_residual", res_coarse, tols["green_residual"],
                   res_coarse <= tols["green_residual"], "<="))
    # exact-on-quadratics operators leave the residual at rounding noise, in
    # which case the decay requirement degenerates to the noise floor
    noise = 1e-10
    decay_tol = res_coarse / max(tols["green_decay"], 1e-300) if res_coarse > noise else noise
    checks.append(("green_decay", res_fine, decay_tol, res_fine <= decay_tol, "<="))

    # mutual-energy equality on ball(0.5) density inside unit-sphere lamina
    gb = build_grid(Ball([0, 0, 0], 0.5), h, 0.0)
    X, Y, Z = gb.meshgrid()
    rho = ScalarField(gb, (X**2 + Y**2 + Z**2 < 0.25).astype(float))
    mesh = panelize(Ball([0, 0, 0], 1.0), panels)
    vv, vs = mutual_energy(rho, mesh, np.ones(mesh.n_panels))
    gap = abs(vv - vs) / max(abs(vv), abs(vs), 1e-300)
    checks.append(("mutual_gap", gap, tols["mutual_gap"], gap <= tols["mutual_gap"], "<="))

    # energy-chain consistency on a compactly supported bump (or a user field)
    gpad = build_grid(Ball([0, 0, 0], 1.0), h, 0.5)
    if "field_csv" in cfg:
        grid_meta = cfg.get("grid_json")
        gfield = grid_from_json(grid_meta) if grid_meta else gpad
        u = field_from_csv(gfield, cfg["field_csv"])
        if not np.all(np.isfinite(u.values)):
            raise ConfigError(f"field CSV {cfg['field_csv']} contains non-finite values")
    else:
        u = _bump_field(gpad)
    rep = complete_energy(u, mesh)
    chain_gap = abs(rep.total - rep.complete_energy) / max(abs(rep.complete_energy), 1e-300)
    checks.append(("chain_gap", chain_gap, tols["chain_gap"],
                   chain_gap <= tols["chain_gap"], "<="))

    # Poisson volume recovery: quadratic potential with rho = 1 exactly
    gq = build_grid(Ball([0, 0, 0], 1.0), h, 0.3)
    uq = ScalarField.from_function(gq, lambda x, y, z: -(2 * np.pi / 3) * (x**2 + y**2 + z**2))
    rec, valid = recover_volume_density(uq)
    vol_err = float(np.abs(rec.values[valid] - 1.0).max())
    checks.append(("poisson_volume", vol_err, tols["poisson_volume"],
                   vol_err <= tols["poisson_volume"], "<="))

    # Poisson surface recovery from the analytic uniform-sphere potential
    delta = 2.0 * min(h, 0.02)
    out1, in1 = normal_probe_points(mesh, delta)
    out2, in2 = normal_probe_points(mesh, 2 * delta)

    def sphere_u(pts):
        r = np.linalg.norm(pts, axis=1)
        return np.where(r >= 1.0, 4.0 * np.pi / r, 4.0 * np.pi)

    u_out = np.stack([sphere_u(out1), sphere_u(out2)], axis=1)
    u_in = np.stack([sphere_u(in1), sphere_u(in2)], axis=1)
    sig = recover_surface_density(u_out, u_in, mesh, delta, sphere_u(mesh.centroids))
    surf_err = float(np.abs(sig - 1.0).max())
    checks.append(("poisson_surface", surf_err, tols["poisson_surface"],
                   surf_err <= tols["poisson_surface"], "<="))

    _write_csv(outdir / "checks.csv", ["check", "value", "tolerance", "passed"],
               [(n, v, t, p) for n, v, t, p, _ in checks])
    failed = [c for c in checks if not c[3]]
    for name, value, tolerance, passed, _ in checks:
        print(f"verify: {'PASS' if passed else 'FAIL'} {name}: {value:.6g} (tol {tolerance:.6g})")
    if failed:
        print(f"verify: {len(failed)} check(s) failed: {', '.join(c[0] for c in failed)}",
              file=sys.stderr)
        return EXIT_CHECKS_FAILED
    print(f"verify: all {len(checks)} checks passed, tables in {outdir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# recover
# ---------------------------------------------------------------------------


def cmd_recover(args):
    cfg = _load_config(args.config)
    if args.h is not None:
        cfg["h"] = args.h
    if args.panels is not None:
        cfg["panels"] = args.panels
    h = _positive(cfg, "h", 0.05)
    panels = int(cfg.get("panels", 50))
    radius = _positive(cfg, "radius", 1.0)
    sigma_true = float(cfg.get("sigma", 1.0))
    ball = Ball([0.0, 0.0, 0.0], radius)
    mesh = panelize(ball, panels)
    delta = float(cfg.get("offset", 2.0 * h))
    if delta <= 0.0:
        raise ConfigError(f"offset must be positive, got {delta}")

    spec = cfg.get("potential", {"kind": "uniform_sphere"})
    kind = spec.get("kind", "uniform_sphere")
    if kind == "uniform_sphere":
        q = 4.0 * np.pi * radius**2 * sigma_true

        def u_at(pts):
            r = np.linalg.norm(pts, axis=1)
            return np.where(r >= radius, q / np.maximum(r, 1e-300), q / radius)

        grid = build_grid(ball, h, _nonnegative(cfg, "padding", 0.5))
        X, Y, Z = grid.meshgrid()
        u = ScalarField(grid, u_at(np.stack([X, Y, Z], axis=-1).reshape(-1, 3)).reshape(grid.dims))
        probes = lambda pts: u_at(pts)
    elif kind == "csv":
        grid = grid_from_json(spec["grid_json"])
        u = field_from_csv(grid, spec["path"])
        if not np.all(np.isfinite(u.values)):
            raise ConfigError(f"field CSV {spec['path']} contains non-finite values")
        probes = lambda pts: u.interp(pts)
    else:
        raise ConfigError(f"unknown potential kind {kind!r}")

    rho, valid = recover_volume_density(u)
    out1, in1 = normal_probe_points(mesh, delta)
    out2, in2 = normal_probe_points(mesh, 2 * delta)
    u_out = np.stack([probes(out1), probes(out2)], axis=1)
    u_in = np.stack([probes(in1), probes(in2)], axis=1)
    sig = recover_surface_density(u_out, u_in, mesh, delta, probes(mesh.centroids))

    outdir = _outdir(args, "recover")
    _write_manifest(outdir, "recover", cfg, args)
    field_to_csv(rho, outdir / "rho.csv")
    grid_to_json(grid, outdir / "grid.json")
    _write_csv(outdir / "sigma.csv", ["cx", "cy", "cz", "sigma"],
               [(c[0], c[1], c[2], s) for c, s in zip(mesh.centroids, sig)])
    print(f"recover: wrote rho.csv ({int(valid.sum())} valid nodes) and sigma.csv "
          f"({mesh.n_panels} panels, mean sigma {sig.mean():.6g}) in {outdir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# relax
# ---------------------------------------------------------------------------


def cmd_relax(args):
    cfg = _load_config(args.config)
    domain = _domain_from_spec(cfg.get("domain", {"kind": "ball", "radius": 1.0}))
    masses_value = float(cfg.get("mass", 1.0))
    if "charges_csv" in cfg:
        charges = ChargeSet.from_csv(cfg["charges_csv"])
        if not bool(np.all(domain.contains(charges.positions, strict=True))):
            raise ConfigError("charges_csv positions must lie strictly inside the domain")
    else:
        n = int(cfg.get("n_charges", 2))
        if n < 1:
            raise ConfigError(f"n_charges must be >= 1, got {n}")
        rng = np.random.default_rng(args.seed)
        lo, hi = domain.bounds()
        pts = []
        while len(pts) < n:
            cand = rng.uniform(lo, hi)
            if domain.contains(cand[None, :], strict=True)[0] and (
                not pts or np.min(np.linalg.norm(np.asarray(pts) - cand, axis=1)) > 1e-6
            ):
                pts.append(cand)
        charges = ChargeSet(np.asarray(pts), np.full(n, masses_value))

    config = RelaxationConfig(
        domain=domain,
        charges=charges,
        step=float(cfg.get("step", 0.5)),
        shrink=float(cfg.get("shrink", 0.5)),
        max_steps=int(cfg.get("max_steps", 20000)),
        boundary_tol=float(cfg.get("boundary_tol", 1e-6)),
        grad_tol=float(cfg.get("grad_tol", 1e-7)),
    )
    outdir = _outdir(args, "relax")
    _write_manifest(outdir, "relax", cfg, args)
    try:
        trace = relax(config)
    except Stalled as exc:
        print(f"relax: stalled: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED

    rows = []
    for k, energy in enumerate(trace.energies):
        mg = trace.max_grads[k] if k < len(trace.max_grads) else ""
        mb = trace.min_boundary_distances[k] if k < len(trace.min_boundary_distances) else ""
        rows.append((k, energy, mg, mb))
    _write_csv(outdir / "trace.csv", ["step", "energy", "max_grad", "min_boundary_distance"], rows)
    _write_csv(outdir / "final_positions.csv", ["x", "y", "z", "m"],
               [(p[0], p[1], p[2], m) for p, m in zip(trace.final_positions, charges.masses)])
    on_boundary = bool(np.all(trace.boundary_distances <= config.boundary_tol))
    print(f"relax: converged={trace.converged} steps={len(trace.energies) - 1} "
          f"final_energy={trace.energies[-1]:.12g} max_boundary_distance="
          f"{trace.boundary_distances.max():.3e} artifacts in {outdir}")
    return EXIT_OK if (trace.converged and on_boundary) else EXIT_NOT_CONVERGED


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="potkit",
        description="Potential-theory workflows: Dirichlet solves, charge energies, "
                    "identity verification, density recovery, charge relaxation.",
    )
    parser.add_argument("--version", action="version", version=f"potkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in [
        ("solve", cmd_solve),
        ("energy", cmd_energy),
        ("verify", cmd_verify),
        ("recover", cmd_recover),
        ("relax", cmd_relax),
    ]:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", default="out", help="output directory root")
        p.add_argument("--name", default=None, help="run name (output subdirectory)")
        p.add_argument("--seed", type=int, default=0, help="64-bit RNG seed")
        p.add_argument("--sequential", action="store_true",
                       help="force the sequential NumPy kernel backend")
        p.add_argument("--h", type=float, default=None, help="grid spacing override")
        p.add_argument("--panels", type=int, default=None, help="panel resolution override")
        p.add_argument("--tol", type=float, default=None, help="solver tolerance override")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.sequential:
        kernels.use_backend("numpy")
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PotkitError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
