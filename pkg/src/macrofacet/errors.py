"""Semantic exception hierarchy shared by all modules."""


class MacrofacetError(Exception):
    """Base class for all errors raised by this package."""


class ParameterDomainError(MacrofacetError, ValueError):
    """An argument lies outside the documented domain of an operation."""


class GrazingSingularityError(MacrofacetError):
    """The Smith Lambda was evaluated at an exactly grazing direction.

    Lambda alone diverges there; callers should use the projected area,
    which is finite and continuous across the horizon.
    """


class DegenerateVisibilityError(MacrofacetError):
    """The projected area toward a direction is (numerically) zero."""


class UnsupportedGeometryError(MacrofacetError):
    """A closed-form path was asked for a geometry it does not cover."""


class NumericFailureError(MacrofacetError):
    """A numerical procedure (quadrature, iteration) failed to converge."""


class InternalConsistencyError(MacrofacetError):
    """An internal invariant was violated (e.g. a majorant was exceeded)."""


class ConfigError(MacrofacetError):
    """A configuration document is malformed or violates the schema."""


class IoError(MacrofacetError):
    """Reading or writing an artifact failed; the message carries the path."""
