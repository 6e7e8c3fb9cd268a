from .base import EdgeClass, NeighborTracker, NodeBase, Protocol, plan_requests
from .flooding import Flooding, FloodingNode
from .multi_source import LabelTable, MultiSource, MultiSourceNode
from .oblivious import ObliviousMultiSource, ObliviousNode, ObliviousParams, oblivious_params
from .single_source import SingleSource, SingleSourceNode

PROTOCOLS = {
    "flooding": Flooding,
    "single-source": SingleSource,
    "multi-source": MultiSource,
    "oblivious-multi": ObliviousMultiSource,
}

__all__ = [
    "EdgeClass",
    "Flooding",
    "FloodingNode",
    "LabelTable",
    "MultiSource",
    "MultiSourceNode",
    "NeighborTracker",
    "NodeBase",
    "ObliviousMultiSource",
    "ObliviousNode",
    "ObliviousParams",
    "PROTOCOLS",
    "Protocol",
    "SingleSource",
    "SingleSourceNode",
    "oblivious_params",
    "plan_requests",
]
