"""Exception hierarchy for the solver package."""


class BreakprodError(Exception):
    """Base class for all package errors."""


class ParameterError(BreakprodError, ValueError):
    """A model parameter violates its domain."""


class InfeasibleStateError(BreakprodError, ValueError):
    """A negative stock level was passed where x >= 0 is required."""


class SolverPathError(BreakprodError, ValueError):
    """The requested closed-form solver does not apply to this instance."""


class SingularityError(BreakprodError, ArithmeticError):
    """A state-dependent term is singular at the evaluation point."""


class SingularJacobianError(BreakprodError, ArithmeticError):
    """The Newton Jacobian could not be factorized."""


class ConfigError(BreakprodError, ValueError):
    """A run configuration could not be parsed or validated."""
