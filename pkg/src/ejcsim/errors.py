"""Exception types raised by the simulator."""


class EjcsimError(Exception):
    """Base class for all package errors."""


class ConfigError(EjcsimError):
    """Invalid, missing, or mutually inconsistent configuration values."""


class GridCommensurabilityError(EjcsimError):
    """A mode recoil does not land on the momentum grid within tolerance."""


class BasisMismatchError(EjcsimError):
    """A state and an operator were built on different bases."""


class DenseGuardError(EjcsimError):
    """The truncated basis is too large to materialize densely."""


class IntegrationError(EjcsimError):
    """Time integration failed or produced an unacceptable norm drift."""


class ReductionCriterionError(EjcsimError):
    """The detuning criterion for a few-level reduction is not satisfied."""
