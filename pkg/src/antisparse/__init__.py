"""Infinity-norm penalized least squares with safe saturation detection."""

from .dictionaries import (
    DictionaryKind,
    derive_seed,
    generate_dictionary,
    generate_observation,
    read_matrix_csv,
    write_matrix_csv,
)
from .dynamic import DynamicConfig, RunReport, dynamic_solve, static_squeeze
from .metrics import OpCounter, counted_matvec, default_tau_grid, performance_profile
from .problem import (
    ProblemInstance,
    SaturationSets,
    dual_objective,
    dual_scaling,
    duality_gap,
    lambda_max,
    primal_objective,
)
from .projection import project_feasible
from .solvers import (
    FwConfig,
    PgConfig,
    fitra_baseline,
    frank_wolfe_solve,
    frank_wolfe_step,
    projected_gradient_solve,
    projected_gradient_step,
    prox_inf_norm,
    rescaling_factor,
    saturation_level_bound,
)
from .squeezing import (
    SafeSphere,
    SqueezedProblem,
    SqueezeContradictionError,
    build_squeezed,
    expand_solution,
    merge_sets,
    saturated_sets,
    sphere_gap,
    sphere_st1,
    squeezing_test,
)

__version__ = "0.1.0"
