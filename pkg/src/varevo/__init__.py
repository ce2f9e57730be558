"""Variation-evolution solver for optimal control problems with terminal constraints."""

from .core import (
    EvolutionRates,
    GradientField,
    MultiplierSystem,
    assemble_multiplier_system,
    compute_gradient_field,
    compute_rates,
    control_and_tf_rates,
    state_rate,
)
from .diagnostics import (
    CostateTrajectory,
    classical_condition_check,
    optimality_residuals,
    reconstruct_costates,
    stationarity_check,
)
from .engine import (
    EvolutionConfig,
    MovingGrid,
    SolveReport,
    StopReason,
    epde_rhs,
    evolve,
    pack_state,
    unpack_state,
)
from .errors import (
    ControllabilityError,
    EvaluationError,
    InfeasibleInitError,
    LayoutError,
    TransitionConditioningError,
    VarevoError,
)
from .model import GainConfig, ProblemModel, TrajectoryGrid, evaluate_cost, feasibility_residual
from .problems import (
    brachistochrone,
    double_integrator,
    finite_difference_gradient_oracle,
    init_feedback_double_integrator,
    init_straightline_brachistochrone,
)
from .transition import TransitionSet, build_transition_set, transition

__version__ = "0.1.0"
