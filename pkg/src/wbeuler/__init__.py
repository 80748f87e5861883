"""Staggered-grid solvers for barotropic flow in a gravity field.

The package provides a semi-implicit scheme whose pressure gradient is
discretised against the hydrostatic background, so discrete equilibria
are preserved to round-off and the low-Mach limit is reached without a
mesh constraint tied to the Mach number.  A projection-based scheme for
the limit system and an explicit colocated reference scheme are included
for comparison studies, together with a benchmark harness.
"""

from .anelastic import (
    AnelasticState,
    anelastic_step,
    ap_convergence_experiment,
    make_anelastic_state,
    neumann_elliptic_solve,
    project_divergence_free,
    run_anelastic,
)
from .cases import CASES, CaseSetup, build_case, get_potential
from .diagnostics import (
    EnergyBreakdown,
    cell_velocity,
    energy_breakdown,
    eoc,
    face_momentum,
    l1_error,
    mach_field,
    total_energy,
    vorticity_field,
)
from .fluxes import (
    DualFluxes,
    dual_convection,
    dual_fluxes,
    dual_inflow,
    dual_mass_residual,
    interface_density,
    mass_flux,
    stabilisation_velocity,
)
from .grid import (
    PERIODIC,
    STEADY,
    TRANSMISSIVE,
    WALL,
    BoundaryCondition,
    FaceField,
    MacGrid,
    build_grid,
    discrete_divergence,
    discrete_gradient,
    discrete_laplacian,
)
from .rusanov import (
    ColocatedState,
    SchemeCrash,
    compute_dt_rusanov,
    make_colocated_state,
    run_rusanov,
    step_rusanov,
)
from .solver import (
    FluidState,
    NewtonFailure,
    SchemeParams,
    SolverFailure,
    StepRejected,
    StepReport,
    check_energy_conditions,
    compute_dt,
    make_state,
    run,
    step,
)
from .thermo import (
    GasLaw,
    HydrostaticState,
    calibrate_constant,
    gamma_mean,
    helmholtz_prime_difference,
    helmholtz_prime_increment,
    hydrostatic_from_potential,
    relative_internal_energy,
)

__version__ = "0.1.0"

__all__ = [
    "AnelasticState",
    "BoundaryCondition",
    "CASES",
    "CaseSetup",
    "ColocatedState",
    "DualFluxes",
    "EnergyBreakdown",
    "FaceField",
    "FluidState",
    "GasLaw",
    "HydrostaticState",
    "MacGrid",
    "NewtonFailure",
    "PERIODIC",
    "STEADY",
    "SchemeCrash",
    "SchemeParams",
    "SolverFailure",
    "StepRejected",
    "StepReport",
    "TRANSMISSIVE",
    "WALL",
    "anelastic_step",
    "ap_convergence_experiment",
    "build_case",
    "build_grid",
    "calibrate_constant",
    "cell_velocity",
    "check_energy_conditions",
    "compute_dt",
    "compute_dt_rusanov",
    "discrete_divergence",
    "discrete_gradient",
    "discrete_laplacian",
    "dual_convection",
    "dual_fluxes",
    "dual_inflow",
    "dual_mass_residual",
    "energy_breakdown",
    "eoc",
    "face_momentum",
    "gamma_mean",
    "helmholtz_prime_difference",
    "helmholtz_prime_increment",
    "get_potential",
    "hydrostatic_from_potential",
    "interface_density",
    "l1_error",
    "mach_field",
    "make_anelastic_state",
    "make_colocated_state",
    "make_state",
    "mass_flux",
    "neumann_elliptic_solve",
    "project_divergence_free",
    "relative_internal_energy",
    "run",
    "run_anelastic",
    "run_rusanov",
    "stabilisation_velocity",
    "step",
    "step_rusanov",
    "total_energy",
    "vorticity_field",
]
