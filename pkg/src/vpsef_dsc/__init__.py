"""Synthesis and simulation of variable-power surface-error backstepping
controllers with dynamic-surface filtering, for user-defined n-th order
non-lower-triangular nonlinear plants."""

from .dsc import (
    ClosedLoop,
    ConstantSigma,
    ControllerConfig,
    ControlTrace,
    ExpDecaySigma,
    FilterState,
    GainSingularityError,
    actual_law,
    closed_loop_derivative,
    filter_derivative,
    virtual_law_first,
    virtual_law_mid,
)
from .errors import ConfigError
from .expr import (
    DifferentiationError,
    DomainError,
    Env,
    ParseError,
    compile_expr,
    differentiate,
    evaluate,
    free_vars,
    parse,
    to_source,
)
from .model import (
    ReferenceSpec,
    SystemSpec,
    check_gain_nonzero,
    check_monotone_assumption,
    to_strict_form,
)
from .scenarios import (
    BUILTIN_NAMES,
    ComparisonReport,
    Scenario,
    builtin,
    compare,
    load_scenario,
    run_scenario,
    scenario_from_dict,
    scenario_to_dict,
)
from .sim import (
    DivergenceError,
    Metrics,
    SimConfig,
    SimulationError,
    Trajectory,
    compute_metrics,
    rk4_step,
    simulate,
)
from .vpsef import Branch, SurfaceValue, VpsefConfig, surface_error

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_NAMES",
    "Branch",
    "ClosedLoop",
    "ComparisonReport",
    "ConfigError",
    "ConstantSigma",
    "ControlTrace",
    "ControllerConfig",
    "DifferentiationError",
    "DivergenceError",
    "DomainError",
    "Env",
    "ExpDecaySigma",
    "FilterState",
    "GainSingularityError",
    "Metrics",
    "ParseError",
    "ReferenceSpec",
    "Scenario",
    "SimConfig",
    "SimulationError",
    "SurfaceValue",
    "SystemSpec",
    "Trajectory",
    "VpsefConfig",
    "actual_law",
    "builtin",
    "check_gain_nonzero",
    "check_monotone_assumption",
    "closed_loop_derivative",
    "compare",
    "compile_expr",
    "compute_metrics",
    "differentiate",
    "evaluate",
    "filter_derivative",
    "free_vars",
    "load_scenario",
    "parse",
    "rk4_step",
    "run_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "simulate",
    "surface_error",
    "to_source",
    "to_strict_form",
    "virtual_law_first",
    "virtual_law_mid",
]
