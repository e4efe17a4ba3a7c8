"""Finite-volume simulator for isothermal water/hydrogen two-phase flow in
rigid porous media, formulated in the persistent variables (liquid pressure,
normalized total hydrogen mass density) so that gas phase appearance and
disappearance need no variable switching."""

from .constitutive import (
    DerivedConstants,
    FluidParams,
    MediumParams,
    blackoil_factors,
    capillary_pressure,
    capillary_pressure_deriv,
    derived_constants,
    effective_saturation,
    equilibrium_partial_pressures,
    mass_to_molar_fractions,
    rel_perms,
)
from .statevars import (
    PrimaryState,
    SecondaryState,
    invert_saturation,
    secondary_state_nocap,
    total_density_X,
)
from .coefficients import (
    CoefficientSet,
    FractionalFlow,
    assemble_coefficients,
    fractional_flow,
)
from .discretization import (
    BoundarySpec,
    FlowProblem,
    Impervious,
    InflowGas,
    OutflowDirichlet,
    SourceField,
    StructuredGrid,
    assemble_residual,
    face_flux,
)
from .solver import (
    NewtonOptions,
    RunSummary,
    TimeStepControl,
    linear_solve,
    newton_solve,
    run_simulation,
)
from .scenario import (
    YEAR,
    ScenarioConfig,
    build_problem,
    config_to_text,
    load_config,
    parse_config_text,
    preset,
    run_scenario,
    write_outputs,
)
from .errors import (
    ConfigError,
    H2MigrateError,
    LiquidDepletionError,
    NewtonConvergenceError,
    SingularJacobianError,
)

__version__ = "0.1.0"
