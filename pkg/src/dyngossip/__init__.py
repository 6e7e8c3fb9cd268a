"""k-token dissemination in adversarial dynamic networks: simulator, protocols, adversaries."""
from .adversaries import FreeEdgeAdversary, IdleCutterAdversary, ObliviousAdversary
from .engine import ExecutionReport, Kind, Message, competitive_residual, learning_count_expected, run
from .errors import (
    ConfigurationError,
    ConstructionError,
    DynGossipError,
    GenerationError,
    ModelViolation,
    NotApplicable,
    ProtocolBug,
    TraceExhausted,
    TraceFormatError,
)
from .graph import DynamicGraphTrace, GeneratorSpec, GraphStream, generate, read_trace, write_trace
from .protocols import PROTOCOLS, Flooding, MultiSource, ObliviousMultiSource, SingleSource

__version__ = "0.1.0"
