"""Exception types raised across the package."""


class DomainError(ValueError):
    """Point lies outside the domain of a map or function."""


class PreconditionError(ValueError):
    """An operation was called outside its documented preconditions."""


class ZeroOnPathError(ArithmeticError):
    """A function meant to be zero-free vanished on a continuation path."""


class NotFoundError(LookupError):
    """Newton inversion found no preimage inside the ball."""


class AmbiguityError(RuntimeError):
    """Two distinct preimages were found; the map is not univalent."""


class InternalInconsistencyError(RuntimeError):
    """A numerical routine hit a state its inputs should rule out."""


class UnsupportedError(ValueError):
    """The requested combination of options has no implementation."""


class ConfigError(ValueError):
    """An experiment configuration failed to parse or validate."""
