"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
report.  Tolerances are pinned here and nowhere else.
"""

import contextlib

import numpy as np
import pytest
from scipy.optimize import minimize

import potkit as pk
from potkit.energy_identities import (
    complete_energy,
    greens_first_identity_residual,
    recover_surface_density,
    recover_volume_density,
)
from potkit.relaxation import RelaxationConfig, relax
from potkit.variational import (
    BoundaryData,
    PerturbationProbe,
    dirichlet_energy,
    dirichlet_form,
    perturbation_expansion_check,
    solve,
)

UNIT_CUBE = pk.Box([0, 0, 0], [1, 1, 1])
UNIT_BALL = pk.Ball([0, 0, 0], 1.0)


@contextlib.contextmanager
def criterion(number, description):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number:2d} FAIL {description}")
        raise
    print(f"ACCEPTANCE {number:2d} PASS {description}")


def test_criterion_01_two_formula_energy_equivalence():
    rng = np.random.default_rng(101)
    with criterion(1, "assembly energy: double sum == potential-weighted sum (1e-12 rel)"):
        for _ in range(100):
            n = int(rng.integers(2, 51))
            pts = rng.uniform(-1, 1, (n, 3))
            # enforce separation so the configurations are generic, not singular
            d = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
            np.fill_diagonal(d, np.inf)
            if d.min() < 1e-3:
                pts += rng.uniform(1.0, 2.0) * np.arange(n)[:, None] * 1e-3
            charges = pk.ChargeSet(pts, rng.uniform(-2, 2, n))
            e1 = pk.assembly_energy(charges)
            e2 = pk.assembly_energy_via_potentials(charges)
            assert abs(e1 - e2) <= 1e-12 * max(1.0, abs(e1))


def test_criterion_02_shell_theorem(unit_sphere_5000):
    mesh = unit_sphere_5000
    assert mesh.n_panels >= 5000
    sigma = np.ones(mesh.n_panels)
    q = 4 * np.pi
    with criterion(2, "shell theorem on 5000-panel unit sphere (1%)"):
        for r in (1.5, 2.0, 4.0):
            u = pk.surface_potential(mesh, sigma, np.array([[r, 0.0, 0.0]]))[0]
            assert abs(u - q / r) <= 0.01 * (q / r)
        for r in (0.0, 0.5):
            u = pk.surface_potential(mesh, sigma, np.array([[0.0, r, 0.0]]))[0]
            assert abs(u - q) <= 0.01 * q


def test_criterion_03_mutual_energy_equality(unit_sphere_5000):
    def gap_and_error(h, mesh):
        grid = pk.build_grid(pk.Ball([0, 0, 0], 0.5), h, 0.0)
        x, y, z = grid.meshgrid()
        rho = pk.ScalarField(grid, (x**2 + y**2 + z**2 < 0.25).astype(float))
        vv, vs = pk.mutual_energy(rho, mesh, np.ones(mesh.n_panels))
        gap = abs(vv - vs) / max(abs(vv), abs(vs))
        err = abs(vv - 2 * np.pi**2 / 3) / (2 * np.pi**2 / 3)
        return gap, err

    with criterion(3, "mutual energy: two quadratures agree (2%), gap shrinks on refinement"):
        gap_c, err_c = gap_and_error(0.05, unit_sphere_5000)
        assert gap_c <= 0.02
        gap_f, err_f = gap_and_error(0.025, pk.panelize(UNIT_BALL, 100))
        # the two quadratures are transposes of one double sum, so their gap
        # sits at rounding noise for every resolution; "shrinks" is then
        # vacuous and is certified via the noise floor, while the genuine
        # convergence (distance to the continuum mutual energy) must shrink
        noise = 1e-12
        assert gap_f <= gap_c or (gap_c <= noise and gap_f <= noise)
        assert err_f <= err_c / 1.5


def test_criterion_04_greens_first_identity():
    def residual(h):
        grid = pk.build_grid(UNIT_CUBE, h, 0.0)
        a = pk.ScalarField.from_function(grid, lambda x, y, z: x**2)
        b = pk.ScalarField.from_function(grid, lambda x, y, z: y**2)
        r = greens_first_identity_residual(a, b)
        # hand values: continuum lhs = rhs = 2/3
        assert abs(r.lhs - 2.0 / 3.0) < 0.15 and abs(r.rhs - 2.0 / 3.0) < 0.15
        return abs(r.residual)

    with criterion(4, "Green's first identity: |lhs-rhs| <= 0.02 at h=0.05, decaying"):
        res_c = residual(0.05)
        res_f = residual(0.025)
        assert res_c <= 0.02
        # the discrete operators are exact on this quadratic pair, so both
        # residuals sit at rounding noise; the decay clause is vacuous there
        noise = 1e-10
        assert res_f <= res_c / 1.5 or (res_c <= noise and res_f <= noise)


def test_criterion_05_poisson_recovery(unit_sphere_5000):
    with criterion(5, "Poisson recovery: rho exact on quadratic (1e-10), sigma within 2%"):
        grid = pk.build_grid(UNIT_BALL, 0.05, 0.2)
        u = pk.ScalarField.from_function(
            grid, lambda x, y, z: -(2 * np.pi / 3) * (x**2 + y**2 + z**2)
        )
        rho, valid = recover_volume_density(u)
        assert valid.any()
        assert np.abs(rho.values[valid] - 1.0).max() <= 1e-10

        h = 0.02
        delta = 2 * h
        mesh = unit_sphere_5000

        def sphere_u(pts):
            r = np.linalg.norm(pts, axis=1)
            return np.where(r >= 1.0, 4 * np.pi / r, 4 * np.pi)

        o1, i1 = pk.normal_probe_points(mesh, delta)
        o2, i2 = pk.normal_probe_points(mesh, 2 * delta)
        sig = recover_surface_density(
            np.stack([sphere_u(o1), sphere_u(o2)], axis=1),
            np.stack([sphere_u(i1), sphere_u(i2)], axis=1),
            mesh, delta, sphere_u(mesh.centroids),
        )
        assert np.abs(sig - 1.0).max() <= 0.02


def test_criterion_06_complete_energy_chain(unit_sphere_5000):
    with criterion(6, "complete energy of sphere potential matches 8 pi^2 (5%)"):
        mesh = unit_sphere_5000
        grid = pk.build_grid(UNIT_BALL, 0.05, 1.0)
        u_s = pk.surface_potential(mesh, 1.0, grid)
        rep = complete_energy(u_s, mesh, chain=False)
        target = 8 * np.pi**2
        assert abs(rep.complete_energy - target) <= 0.05 * target
        surf_self = pk.surface_self_energy(mesh, np.ones(mesh.n_panels))
        assert abs(rep.complete_energy - surf_self) <= 0.05 * surf_self
        assert rep.complete_energy == pytest.approx(
            (rep.dirichlet_interior + rep.dirichlet_exterior) / (8 * np.pi), rel=1e-14
        )


def test_criterion_07_variational_solver_exactness():
    with criterion(7, "solver: harmonic data exact to 1e-10; pole error ratio in [3.2, 4.8]"):
        for fn in (lambda x, y, z: x, lambda x, y, z: x**2 - y**2):
            grid = pk.build_grid(UNIT_CUBE, 0.1, 0.0)
            res = solve(grid, BoundaryData.from_function(grid, fn), tol=1e-12)
            assert res.converged
            x, y, z = grid.meshgrid()
            interior = grid.mask == pk.INTERIOR
            assert np.abs(res.field.values[interior] - fn(x, y, z)[interior]).max() <= 1e-10

        pole = np.array([1.6, 1.4, 2.0])  # outside any padded box used here

        def pole_fn(x, y, z):
            return 1.0 / np.sqrt((x - pole[0]) ** 2 + (y - pole[1]) ** 2 + (z - pole[2]) ** 2)

        errs = []
        for h in (0.05, 0.025):
            grid = pk.build_grid(UNIT_CUBE, h, 0.0)
            res = solve(grid, BoundaryData.from_function(grid, pole_fn), tol=1e-12)
            assert res.converged
            x, y, z = grid.meshgrid()
            interior = grid.mask == pk.INTERIOR
            errs.append(np.abs(res.field.values[interior] - pole_fn(x, y, z)[interior]).max())
        assert 3.2 <= errs[0] / errs[1] <= 4.8


def test_criterion_08_perturbation_identity():
    rng = np.random.default_rng(808)
    grid = pk.build_grid(UNIT_CUBE, 0.125, 0.0)
    with criterion(8, "D(u+xh) expansion exact to 1e-10 over 50 random triples"):
        for _ in range(50):
            u = pk.ScalarField(grid, rng.standard_normal(grid.dims))
            probe = PerturbationProbe.random(grid, rng, x_samples=rng.uniform(-3, 3, 3))
            assert perturbation_expansion_check(u, probe) <= 1e-10


def test_criterion_09_minimality_and_first_variation():
    rng = np.random.default_rng(909)
    grid = pk.build_grid(UNIT_CUBE, 0.125, 0.0)
    f = BoundaryData(grid, rng.standard_normal(grid.n_boundary))
    res = solve(grid, f, tol=1e-12)
    assert res.converged
    with criterion(9, "minimality: D(u+xh) >= D(u) - 1e-10 scale; |D(u,h)| <= 1e-8 scale"):
        du = res.dirichlet_energy
        for _ in range(20):
            probe = PerturbationProbe.random(grid, rng)
            dh = dirichlet_energy(probe.h_field)
            scale = max(1.0, du, dh)
            assert abs(dirichlet_form(res.field, probe.h_field)) <= 1e-8 * scale
            for x in probe.x_samples:
                shifted = pk.ScalarField(grid, res.field.values + x * probe.h_field.values)
                assert dirichlet_energy(shifted) >= du - 1e-10 * scale


def test_criterion_10_maximum_principle_and_mean_value():
    rng = np.random.default_rng(1010)
    with criterion(10, "maximum principle and neighbor-average consistency"):
        for domain, h in ((UNIT_CUBE, 0.125), (UNIT_BALL, 0.2)):
            grid = pk.build_grid(domain, h, 0.0)
            f = BoundaryData(grid, rng.standard_normal(grid.n_boundary))
            res = solve(grid, f, tol=1e-12)
            assert res.converged
            u = res.field.values
            interior = grid.mask == pk.INTERIOR
            spread = f.values.max() - f.values.min()
            assert u[interior].min() >= f.values.min() - 1e-10 * spread
            assert u[interior].max() <= f.values.max() + 1e-10 * spread
            nb = (
                u[2:, 1:-1, 1:-1] + u[:-2, 1:-1, 1:-1] + u[1:-1, 2:, 1:-1]
                + u[1:-1, :-2, 1:-1] + u[1:-1, 1:-1, 2:] + u[1:-1, 1:-1, :-2]
            ) / 6.0
            deep = interior[1:-1, 1:-1, 1:-1].copy()
            # restrict to interior nodes whose 6 neighbors are interior
            for shift in range(6):
                ax, sgn = divmod(shift, 2)
                rolled = np.roll(interior, 1 if sgn else -1, axis=ax)
                deep &= rolled[1:-1, 1:-1, 1:-1]
            assert np.abs(u[1:-1, 1:-1, 1:-1][deep] - nb[deep]).max() <= 1e-10 * (
                1 + np.abs(f.values).max()
            )


def _thomson_oracle(n, seed, restarts=12):
    """Best energy of n unit charges pinned to the unit sphere, random restarts."""
    rng = np.random.default_rng(seed)
    best = np.inf
    for _ in range(restarts):
        x0 = rng.standard_normal((n, 3))
        x0 /= np.linalg.norm(x0, axis=1, keepdims=True)
        angles0 = np.stack([np.arccos(np.clip(x0[:, 2], -1, 1)),
                            np.arctan2(x0[:, 1], x0[:, 0])], axis=1).ravel()

        def energy(angles):
            th, ph = angles.reshape(-1, 2).T
            pts = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)
            d = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
            iu = np.triu_indices(n, 1)
            return float((1.0 / d[iu]).sum())

        out = minimize(energy, angles0, method="L-BFGS-B")
        best = min(best, out.fun)
    return best


_RELAX_TRACES = {}


def _relaxed(n):
    if n not in _RELAX_TRACES:
        rng = np.random.default_rng(1100 + n)
        charges = pk.ChargeSet(rng.uniform(-0.5, 0.5, (n, 3)), np.ones(n))
        cfg = RelaxationConfig(UNIT_BALL, charges, step=0.5, max_steps=50000,
                               boundary_tol=1e-6, grad_tol=1e-7)
        _RELAX_TRACES[n] = relax(cfg)
    return _RELAX_TRACES[n]


def test_criterion_11_boundary_concentration():
    with criterion(11, "relax N=2,3,8: charges on sphere (1e-6); N=2 E=0.5; N=3 E=sqrt(3)"):
        for n in (2, 3, 8):
            trace = _relaxed(n)
            assert trace.converged
            assert trace.boundary_distances.max() <= 1e-6
        assert abs(_relaxed(2).energies[-1] - 0.5) <= 1e-9
        e3 = _relaxed(3).energies[-1]
        assert abs(e3 - np.sqrt(3)) <= 1e-3
        assert abs(e3 - _thomson_oracle(3, seed=33)) <= 1e-3


def test_criterion_12_monotone_descent():
    with criterion(12, "relaxation accepts only strictly energy-decreasing steps"):
        for n in (2, 3, 8):
            energies = _relaxed(n).energies
            assert all(b < a for a, b in zip(energies, energies[1:]))
