"""Solver and verification harness for a virus-infection model with
saturated chemotaxis on boxes with no-flux boundaries."""

from .discretization import (
    ConvergenceError,
    FaceVelocity,
    chemotaxis_divergence,
    face_gradient,
    helmholtz_solve,
    laplacian_neumann,
)
from .grid import Grid, State, grad_norm_sq, integrate, lp_norm, read_snapshot, write_snapshot
from .model import (
    Coefficients,
    EnergyExponent,
    ExponentInfeasibleError,
    Params,
    alpha_threshold,
    chemotactic_sensitivity,
    homogeneous_steady_states,
    reaction_rates,
    select_energy_exponent,
)
from .monitors import (
    BoundednessVerdict,
    DiagnosticsRecord,
    check_u_mass_bound,
    check_v_mass_bound,
    classify_boundedness,
    mass_identity_residual,
    quasi_energy,
)
from .stepper import (
    NegativityDetected,
    RunResult,
    StepControl,
    UnstableRunError,
    run,
    stable_dt,
    step,
)
from .sweep import SweepResult, SweepRow, SweepSpec, initial_condition_preset, run_sweep

__version__ = "0.1.0"

__all__ = [
    "BoundednessVerdict", "Coefficients", "ConvergenceError", "DiagnosticsRecord",
    "EnergyExponent", "ExponentInfeasibleError", "FaceVelocity", "Grid",
    "NegativityDetected", "Params", "RunResult", "State", "StepControl",
    "SweepResult", "SweepRow", "SweepSpec", "UnstableRunError",
    "alpha_threshold", "check_u_mass_bound", "check_v_mass_bound",
    "chemotactic_sensitivity", "chemotaxis_divergence", "classify_boundedness",
    "face_gradient", "grad_norm_sq", "helmholtz_solve",
    "homogeneous_steady_states", "initial_condition_preset", "integrate",
    "laplacian_neumann", "lp_norm", "mass_identity_residual", "quasi_energy",
    "reaction_rates", "read_snapshot", "run", "run_sweep",
    "select_energy_exponent", "stable_dt", "step", "write_snapshot",
]
