"""Exception hierarchy."""


class VarevoError(Exception):
    """Base class for all solver errors."""


class EvaluationError(VarevoError):
    """A user evaluator returned a non-finite value or a wrongly shaped array."""


class TransitionConditioningError(VarevoError):
    """A fundamental matrix is singular or too ill-conditioned to invert."""


class ControllabilityError(VarevoError):
    """The terminal-constraint multiplier system cannot be solved."""


class LayoutError(VarevoError):
    """A packed state vector does not match the expected layout."""


class InfeasibleInitError(VarevoError):
    """The initial trajectory is outside the feasible domain."""
