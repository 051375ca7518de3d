"""Exception hierarchy."""


class CHMarcusError(Exception):
    """Base class for all package errors."""


class GridMismatchError(CHMarcusError, ValueError):
    """Fields sampled on different grids were combined."""


class DomainTooSmallError(CHMarcusError, ValueError):
    """The soliton tail does not decay inside the periodic box."""


class InversionError(CHMarcusError, RuntimeError):
    """The parametric soliton map could not be inverted."""


class JumpTooLargeError(CHMarcusError, ValueError):
    """A Marcus jump displaces characteristics by more than a quarter period."""


class SolverError(CHMarcusError, RuntimeError):
    """Time integration aborted (CFL guard or non-finite state)."""


class ModulationBreakdown(CHMarcusError, RuntimeError):
    """The modulation decomposition could not be continued."""


class ConfigError(CHMarcusError, ValueError):
    """Invalid run configuration."""
