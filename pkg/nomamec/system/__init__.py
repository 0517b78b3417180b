from .types import ChannelState, DecisionVector, PopularityMatrix, TaskSpec, Topology
from .generators import draw_channel, generate_tasks, generate_topology, stream_rng

__all__ = [
    "ChannelState", "DecisionVector", "PopularityMatrix", "TaskSpec", "Topology",
    "draw_channel", "generate_tasks", "generate_topology", "stream_rng",
]
