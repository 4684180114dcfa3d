"""Mean-field phases, dynamics, fluctuations and nonreciprocity of a
parametrically driven cavity-magnon system in a spinning resonator."""
from .dynamics import Trajectory, integrate, settle, settle_many, settle_state
from .errors import (
    CavmagError,
    ConsistencyError,
    DivergenceError,
    DomainError,
    InstabilityError,
    NonConvergenceError,
    SingularityError,
    StepUnderflowError,
    SweepSpecError,
)
from .fluctuations import CovarianceResult, diffusion_matrix, fluctuation_sweep, solve_lyapunov
from .model import FizeauInput, SystemParams, beta, delta_a_tilde, drive_bound, fizeau_shift, is_valid
from .nonreciprocity import IsolationPoint, boundary_curves, isolation, isolation_map
from .stability import Phase, Protocol, classify_point, drift_matrix, phase_diagram
from .steady_state import Branch, Regime, critical_strengths, magnon_branches, steady_states
from .sweep import Axis, SweepResult, SweepSpec, __version__, preset, run_sweep

__all__ = [
    "Axis", "Branch", "CavmagError", "ConsistencyError", "CovarianceResult", "DivergenceError",
    "DomainError", "FizeauInput", "InstabilityError", "IsolationPoint", "NonConvergenceError",
    "Phase", "Protocol", "Regime", "SingularityError", "StepUnderflowError", "SweepResult",
    "SweepSpec", "SweepSpecError", "SystemParams", "Trajectory", "__version__", "beta",
    "boundary_curves", "classify_point", "critical_strengths", "delta_a_tilde", "diffusion_matrix",
    "drift_matrix", "drive_bound", "fizeau_shift", "fluctuation_sweep", "integrate", "is_valid",
    "isolation", "isolation_map", "magnon_branches", "phase_diagram", "preset", "run_sweep",
    "settle", "settle_many", "settle_state", "solve_lyapunov", "steady_states",
]
