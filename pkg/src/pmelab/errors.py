"""Exception types shared across the package."""


class PmelabError(Exception):
    """Base class for all package errors."""


class ConfigurationError(PmelabError):
    """Invalid shape, grid, datum or experiment configuration."""


class DomainError(PmelabError):
    """Mathematically invalid input (negative field with fractional power, ...)."""


class RegimeError(PmelabError):
    """Operation invoked outside the parameter regime it is defined for."""


class InfeasibilityError(PmelabError):
    """No admissible epsilon choice exists for the requested constants."""


class QuadratureError(PmelabError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class PositivityError(PmelabError):
    """The solver could not preserve strict positivity of the field."""


class EstimationError(PmelabError):
    """Blow-up time extraction failed (no usable blow-up signature)."""
