"""Exception hierarchy shared across the simulator."""


class DynGossipError(Exception):
    """Base class for all simulator errors."""


class ModelViolation(DynGossipError):
    """The adversary produced a graph that breaks the network model."""


class ProtocolBug(DynGossipError):
    """A protocol emitted a message the model does not allow."""


class ConfigurationError(DynGossipError, ValueError):
    """Inputs are malformed or incompatible with each other."""


class TraceFormatError(ConfigurationError):
    pass


class GenerationError(ConfigurationError):
    """A generator spec cannot produce a valid trace."""


class TraceExhausted(DynGossipError, IndexError):
    pass


class NotApplicable(DynGossipError, ValueError):
    pass


class ConstructionError(DynGossipError):
    """The lower-bound construction broke one of its own guarantees."""
