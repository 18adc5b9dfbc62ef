"""Incompressible elastic plate model in the moderate-deflection regime.

Reduction of a three dimensional quadratic energy form to the plane under a
trace-free completion constraint, direct minimization of the resulting plate
energy, and an independent route through the Airy stress potential for
isotropic materials, with oracle suites tying the two together.
"""

from .airy import (
    AiryState,
    FixedPointConfig,
    IsotropicParams,
    LimitRow,
    airy_bracket,
    bending_stiffness,
    biharmonic_solve,
    limit_study,
    recover_in_plane,
    solve_compressible_vk,
    solve_vk,
    young_modulus,
)
from .config import ConfigError, RunConfig, load_config, parse_config, preset_force
from .grids import Grid, field_l2, operators, quad_weights, read_field, write_field
from .plate_energy import (
    EnergyBreakdown,
    PlateProblem,
    bending_strain,
    energy,
    energy_gradient,
    membrane_strain,
)
from .solver import (
    Solution,
    SolverConfig,
    el_residuals,
    gauge_fix,
    minimize,
    solve_membrane,
)
from .tensor_forms import (
    IndefiniteFormError,
    LinOp2,
    QuadForm3,
    cof2,
    complete_matrix,
    completion_vector,
    polarize,
    reduced_operator,
    reduced_value,
)
from .verification import (
    Report,
    StrainProfile,
    Truncation,
    bruteforce_reduced_value,
    density_hessian,
    random_positive_form,
    reduction_identity_check,
    stored_energy_log,
    stored_energy_reciprocal,
    stress_moments_check,
    truncation_suite,
)

__version__ = "0.1.0"
