"""Discrete point-charge formulas in simplified units (force constant k = 1).

Charges carry signed masses; the formulas are sign-agnostic.  All pair sums
use the explicit i != j convention.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ZeroDistance


@dataclass(frozen=True, eq=False)
class ChargeSet:
    """Finite set of point charges: positions (N, 3) and masses (N,)."""

    positions: np.ndarray
    masses: np.ndarray

    def __init__(self, positions, masses):
        p = np.ascontiguousarray(positions, dtype=np.float64).reshape(-1, 3)
        m = np.ascontiguousarray(masses, dtype=np.float64).reshape(-1)
        if len(p) != len(m):
            raise ValueError(f"{len(p)} positions but {len(m)} masses")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(m))):
            raise ValueError("positions and masses must be finite")
        if len(p) >= 2 and kernels.min_pair_distance(p) == 0.0:
            raise ZeroDistance("charge positions must be pairwise distinct")
        p.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "masses", m)

    def __len__(self) -> int:
        return len(self.masses)

    def drop(self, i: int) -> "ChargeSet":
        keep = np.arange(len(self)) != i
        return ChargeSet(self.positions[keep], self.masses[keep])

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["x", "y", "z", "m"])
            for pos, m in zip(self.positions, self.masses):
                w.writerow([repr(float(pos[0])), repr(float(pos[1])), repr(float(pos[2])), repr(float(m))])

    @classmethod
    def from_csv(cls, path) -> "ChargeSet":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0:3], data[:, 3])


def coulomb_force_magnitude(m1: float, m2: float, r: float) -> float:
    """|F| = m1 m2 / r^2 between two charges at distance r > 0."""
    if r == 0.0:
        raise ZeroDistance("force is singular at zero separation")
    if r < 0.0:
        raise ValueError(f"distance must be positive, got {r}")
    return m1 * m2 / r**2


def assembly_energy(charges: ChargeSet) -> float:
    """Work done assembling the charges from infinity, one at a time.

    E = 1/2 sum_{i != j} m_i m_j / r_ij  =  sum_{i<j} m_i m_j / r_ij.
    A single charge costs nothing; the sum is permutation invariant.
    """
    energy, _ = kernels.pairwise_energy(charges.positions, charges.masses)
    return energy


def point_potential(charges: ChargeSet, x) -> float:
    """Potential U(x) = sum_j m_j / |x - P_j| of a unit probe charge at x."""
    x = np.asarray(x, dtype=np.float64).reshape(1, 3)
    out = kernels.point_source_sum(charges.positions, charges.masses, x)
    return float(out[0])


def assembly_energy_via_potentials(charges: ChargeSet) -> float:
    """E = 1/2 sum_i m_i U(P_i) with U the potential of the other charges.

    Agrees with assembly_energy exactly in exact arithmetic; within 1e-12
    relative in floating point.
    """
    n = len(charges)
    if n < 2:
        return 0.0
    p, m = charges.positions, charges.masses
    d = np.linalg.norm(p[:, None, :] - p[None, :, :], axis=2)
    off = ~np.eye(n, dtype=bool)
    if np.any(d[off] == 0.0):
        raise ZeroDistance("two charges occupy the same position")
    u = (m[None, :] / np.where(off, d, 1.0) * off).sum(axis=1)
    return 0.5 * float(np.dot(m, u))
