import numpy as np
import pytest

import potkit as pk
from potkit.relaxation import RelaxationConfig, energy_gradient, relax


def ball_config(positions, masses=None, **kw):
    charges = pk.ChargeSet(positions, np.ones(len(positions)) if masses is None else masses)
    defaults = dict(step=0.5, max_steps=20000, grad_tol=1e-7, boundary_tol=1e-6)
    defaults.update(kw)
    return RelaxationConfig(pk.Ball([0, 0, 0], 1.0), charges, **defaults)


def test_gradient_matches_finite_differences(rng):
    cs = pk.ChargeSet(rng.uniform(-0.4, 0.4, (6, 3)), rng.uniform(0.5, 2.0, 6))
    grad = energy_gradient(cs)
    eps = 1e-5
    fd = np.zeros_like(grad)
    for i in range(6):
        for d in range(3):
            plus = cs.positions.copy()
            plus[i, d] += eps
            minus = cs.positions.copy()
            minus[i, d] -= eps
            fd[i, d] = (
                pk.assembly_energy(pk.ChargeSet(plus, cs.masses))
                - pk.assembly_energy(pk.ChargeSet(minus, cs.masses))
            ) / (2 * eps)
    assert np.abs(grad - fd).max() <= 1e-6 * np.abs(fd).max()


def test_gradient_two_charges_points_toward_other():
    cs = pk.ChargeSet([[0.5, 0, 0], [-0.5, 0, 0]], [1, 1])
    grad = energy_gradient(cs)
    # dE/dP of the +x charge points in -x with magnitude 1 (= |F| at r=1)
    np.testing.assert_allclose(grad[0], [-1.0, 0.0, 0.0], atol=1e-14)
    np.testing.assert_allclose(grad[1], [1.0, 0.0, 0.0], atol=1e-14)


def test_gradient_single_charge_zero():
    assert np.all(energy_gradient(pk.ChargeSet([[0.1, 0.2, 0.3]], [2.0])) == 0.0)


def test_gradient_square_symmetry():
    s = 0.3
    cs = pk.ChargeSet([[s, s, 0], [-s, s, 0], [-s, -s, 0], [s, -s, 0]], np.ones(4))
    grad = energy_gradient(cs)
    mags = np.linalg.norm(grad, axis=1)
    assert np.allclose(mags, mags[0], rtol=1e-12)
    for g, p in zip(grad, cs.positions):
        d = p / np.linalg.norm(p)
        assert np.dot(g, d) < 0  # gradient points inward along the diagonal
        assert abs(abs(np.dot(g, d)) - np.linalg.norm(g)) < 1e-12


def test_single_charge_converges_immediately():
    tr = relax(ball_config([[0.3, -0.1, 0.2]]))
    assert tr.converged
    assert tr.energies == [0.0]
    np.testing.assert_allclose(tr.final_positions, [[0.3, -0.1, 0.2]])


def test_two_charges_reach_antipodes():
    tr = relax(ball_config([[0.1, 0.05, 0.0], [-0.2, 0.3, 0.1]]))
    assert tr.converged
    sep = np.linalg.norm(tr.final_positions[0] - tr.final_positions[1])
    assert abs(sep - 2.0) < 1e-6
    assert abs(tr.energies[-1] - 0.5) < 1e-9
    assert tr.boundary_distances.max() < 1e-6


def test_three_charges_great_circle_triangle(rng):
    tr = relax(ball_config(rng.uniform(-0.5, 0.5, (3, 3))))
    assert tr.converged
    assert abs(tr.energies[-1] - np.sqrt(3)) < 1e-3
    d = np.linalg.norm(tr.final_positions - tr.final_positions[[1, 2, 0]], axis=1)
    assert np.allclose(d, np.sqrt(3), atol=1e-5)  # equilateral, side sqrt(3)


def test_monotone_strict_descent(rng):
    tr = relax(ball_config(rng.uniform(-0.5, 0.5, (5, 3))))
    e = tr.energies
    assert all(b < a for a, b in zip(e, e[1:]))


def test_boundary_concentration_eight_charges(rng):
    tr = relax(ball_config(rng.uniform(-0.5, 0.5, (8, 3))))
    assert tr.converged
    assert tr.boundary_distances.max() < 1e-6


def test_rotation_equivariance(rng):
    start = rng.uniform(-0.5, 0.5, (4, 3))
    theta = 0.7
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    t1 = relax(ball_config(start))
    t2 = relax(ball_config(start @ rot.T))
    assert abs(t1.energies[-1] - t2.energies[-1]) < 1e-9


def test_box_domain_projection(rng):
    box = pk.Box([-1, -1, -1], [1, 1, 1])
    charges = pk.ChargeSet(rng.uniform(-0.3, 0.3, (4, 3)), np.ones(4))
    tr = relax(RelaxationConfig(box, charges, step=0.5, max_steps=20000, grad_tol=1e-7))
    assert tr.converged
    assert tr.boundary_distances.max() < 1e-6  # corners of the box


def test_relax_preconditions(rng):
    with pytest.raises(ValueError):
        relax(ball_config([[0.1, 0, 0], [-0.1, 0, 0]], masses=[1.0, -1.0]))
    with pytest.raises(ValueError):
        relax(ball_config([[1.5, 0, 0]]))  # outside the ball
    with pytest.raises(ValueError):
        RelaxationConfig(pk.Ball([0, 0, 0], 1.0), pk.ChargeSet([[0, 0, 0]], [1.0]), step=-1.0)
    with pytest.raises(ValueError):
        RelaxationConfig(pk.Ball([0, 0, 0], 1.0), pk.ChargeSet([[0, 0, 0]], [1.0]), shrink=1.0)


def test_stall_raises(rng):
    # a gradient tolerance below the energy's float resolution cannot be
    # reached; the line search underflows and reports Stalled
    cfg = ball_config([[0.1, 0.05, 0.0], [-0.2, 0.3, 0.1]], grad_tol=1e-13)
    with pytest.raises(pk.Stalled):
        relax(cfg)


def test_max_steps_returns_unconverged(rng):
    tr = relax(ball_config(rng.uniform(-0.5, 0.5, (4, 3)), max_steps=3))
    assert not tr.converged
    assert tr.stop_reason == "max_steps"
