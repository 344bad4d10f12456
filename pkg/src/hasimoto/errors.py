"""Exception types shared across the package."""


class HasimotoError(Exception):
    """Base class for all package errors."""


class DomainError(HasimotoError, ValueError):
    """Inputs live on different bases, backends or have the wrong shape."""


class RetractionError(HasimotoError, ArithmeticError):
    """The return-to-manifold map is ill defined for the given ambient element."""


class FrameError(HasimotoError, ArithmeticError):
    """A frame is not orthonormal or re-orthonormalization collapsed."""


class ConfigError(HasimotoError, ValueError):
    """Invalid experiment or flow configuration."""
