"""Constrained energy descent of point charges confined to a closed domain.

Projected gradient descent with backtracking: like-signed charges repel, the
domain projection keeps them inside, and descent terminates when the
projected gradient is small.  At convergence the charges sit on the boundary
surface (no stable interior equilibrium exists for a repulsive system) and
the accepted-step energies decrease monotonically.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import kernels
from .electrostatics import ChargeSet
from .errors import Stalled
from .geometry import Domain


@dataclass(eq=False)
class RelaxationConfig:
    domain: Domain
    charges: ChargeSet
    step: float = 0.1
    shrink: float = 0.5
    max_steps: int = 5000
    boundary_tol: float = 1e-6
    grad_tol: float = 1e-7

    def __post_init__(self):
        if not self.step > 0.0:
            raise ValueError(f"step must be positive, got {self.step}")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError(f"shrink must lie in (0, 1), got {self.shrink}")
        if not (self.boundary_tol > 0.0 and self.grad_tol > 0.0):
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")


@dataclass(eq=False)
class RelaxationTrace:
    """Descent history: energies per accepted step (starting with the initial
    configuration), final positions, per-charge distance to the boundary
    surface, and per-step diagnostics for the trace CSV."""

    energies: list[float]
    final_positions: np.ndarray
    boundary_distances: np.ndarray
    converged: bool
    max_grads: list[float] = dc_field(default_factory=list)
    min_boundary_distances: list[float] = dc_field(default_factory=list)
    stop_reason: str = ""


def energy_gradient(charges: ChargeSet) -> np.ndarray:
    """Gradient of the assembly energy with respect to each position:

        dE/dP_i = sum_{j != i} m_i m_j (P_j - P_i) / |P_j - P_i|^3,

    i.e. minus the net Coulomb force on charge i; moving along -grad drives
    equal-sign charges apart.  Matches central finite differences of
    assembly_energy to 1e-6 relative.
    """
    grad, _ = kernels.pairwise_gradient(charges.positions, charges.masses)
    return grad


def _projected_gradient_norm(domain, positions, grad, probe_step):
    """Max row norm of (P - proj(P - s g)) / s, the stationarity residual."""
    if len(positions) == 0:
        return 0.0
    moved = domain.project(positions - probe_step * grad)
    return float(np.linalg.norm(positions - moved, axis=1).max()) / probe_step


def relax(config: RelaxationConfig) -> RelaxationTrace:
    """Run projected gradient descent until the projected gradient is small.

    Each iteration proposes P - s * grad E (projected back into the closed
    domain) with s backtracking from config.step by config.shrink until the
    energy strictly decreases; a step that underflows below 1e-15 raises
    Stalled.  Terminates converged when the projected-gradient norm falls
    below grad_tol, or unconverged after max_steps.
    """
    domain = config.domain
    masses = np.asarray(config.charges.masses)
    if len(masses) and not (np.all(masses > 0.0) or np.all(masses < 0.0)):
        raise ValueError("relaxation requires all charge masses of one sign")
    positions = np.array(config.charges.positions, dtype=np.float64)
    if not bool(np.all(domain.contains(positions, strict=True))):
        raise ValueError("initial positions must lie strictly inside the domain")

    def energy_of(p):
        e, _ = kernels.pairwise_energy(p, masses)
        return e

    energy = energy_of(positions)
    energies = [energy]
    max_grads: list[float] = []
    min_bdists: list[float] = []
    converged = False
    reason = "max_steps"

    for _ in range(config.max_steps):
        grad, _ = kernels.pairwise_gradient(positions, masses)
        gnorm = _projected_gradient_norm(domain, positions, grad, config.step)
        max_grads.append(gnorm)
        bdist = domain.boundary_distance(positions)
        min_bdists.append(float(np.min(bdist)) if np.size(bdist) else 0.0)
        if gnorm <= config.grad_tol:
            converged = True
            reason = "grad_tol"
            break
        s = config.step
        while True:
            candidate = domain.project(positions - s * grad)
            cand_energy = energy_of(candidate)
            if cand_energy < energy:
                positions = candidate
                energy = cand_energy
                energies.append(energy)
                break
            s *= config.shrink
            if s < 1e-15:
                raise Stalled(
                    f"line search underflowed at energy {energy:.12g} "
                    f"(projected gradient {gnorm:.3e})"
                )

    return RelaxationTrace(
        energies=energies,
        final_positions=positions,
        boundary_distances=np.asarray(domain.boundary_distance(positions)),
        converged=converged,
        max_grads=max_grads,
        min_boundary_distances=min_bdists,
        stop_reason=reason,
    )
