"""Exception types shared across the package."""


class AerialLinkError(Exception):
    """Base class for all errors raised by this package."""


class InvalidGeometry(AerialLinkError):
    """Antenna cone does not produce a finite ground footprint."""


class OutOfFootprint(AerialLinkError):
    """A ground distance lies outside the antenna footprint."""


class QuadratureFailure(AerialLinkError):
    """A numerical integral did not reach the requested tolerance."""


class ParseError(AerialLinkError):
    """A scenario file could not be parsed."""


class ValidationError(AerialLinkError):
    """A configuration value violates an invariant."""
