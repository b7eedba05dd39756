"""Exception types shared across the package."""


class PadicFTError(Exception):
    """Base class for all package errors."""


class CapacityError(PadicFTError):
    """Raised when a lattice is too large for dense desk-scale work."""


class DivergentIntegral(PadicFTError):
    """Raised when a radial integral does not converge."""


class NotHermitian(PadicFTError):
    """Raised when an inverse transform leaves a non-negligible imaginary part."""


class NotLizorkin(PadicFTError):
    """Raised when a field that must have zero mean does not."""


class SingularSystem(PadicFTError):
    """Raised when a linear solve has no level-independent solution."""


class InvalidSpec(PadicFTError, ValueError):
    """Raised when model parameters violate a measure precondition."""


class TooLarge(PadicFTError):
    """Raised when a Wick pairing enumeration exceeds the hard cap."""
