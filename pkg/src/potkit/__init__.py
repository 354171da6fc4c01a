"""potkit: an electrostatic potential-theory toolkit.

Discrete and continuous Coulomb energies, Newtonian volume and surface
potentials, Poisson density recovery, the Green-identity reduction of total
energy to Dirichlet integrals, a Dirichlet-problem solver by energy
minimization, and constrained charge relaxation.
"""

from .electrostatics import (
    ChargeSet,
    assembly_energy,
    assembly_energy_via_potentials,
    coulomb_force_magnitude,
    point_potential,
)
from .energy_identities import (
    GreenIdentityResult,
    complete_energy,
    dirichlet_face_sums,
    greens_first_identity_residual,
    laplacian_7pt,
    probe_field_for_surface_density,
    recover_surface_density,
    recover_volume_density,
)
from .errors import DomainTooSmall, GridMismatch, PotkitError, Stalled, ZeroDistance
from .geometry import (
    BOUNDARY,
    EXTERIOR,
    INTERIOR,
    Ball,
    Box,
    Domain,
    Grid3,
    ScalarField,
    SurfaceMesh,
    build_grid,
    normal_probe_points,
    panelize,
)
from .potential_fields import (
    CUBE_MEAN_INV_R,
    DensityField,
    EnergyReport,
    PotentialSplit,
    mutual_energy,
    split_potential,
    surface_potential,
    surface_self_energy,
    total_energy,
    volume_potential,
    volume_self_energy,
)
from .relaxation import RelaxationConfig, RelaxationTrace, energy_gradient, relax
from .variational import (
    BoundaryData,
    PerturbationProbe,
    SolveResult,
    dirichlet_energy,
    dirichlet_form,
    minimality_check,
    perturbation_expansion_check,
    solve,
)

__version__ = "0.1.0"
