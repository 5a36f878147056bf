"""
Interaction networks built from logged meetings.

## Quick Reference

    >>> stats = network_stats(result.interaction_log, robot_ids=range(10), window=(0, 200))
    >>> stats.network.weight(0, 3)          # meetings between robots 0 and 3
    >>> stats.isolates                      # robots nobody met in the window
    >>> stats.network.to_frame()            # id_a,id_b,count,window_start,window_end
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import pandas as pd

from .core import InteractionEvent
from .errors import PreconditionError

logger = logging.getLogger(__name__)

NETWORK_COLUMNS = ["id_a", "id_b", "count", "window_start", "window_end"]


@dataclass
class InteractionNetwork:
    """Weighted undirected graph; edge weight = number of meetings in [start, end]."""
    graph: nx.Graph
    window: Tuple[float, float]

    @property
    def nodes(self) -> List[int]:
        return sorted(self.graph.nodes)

    def weight(self, a: int, b: int) -> int:
        if not self.graph.has_edge(a, b):
            return 0
        return self.graph[a][b]["weight"]

    def edges(self) -> List[Tuple[int, int, int]]:
        return sorted((min(a, b), max(a, b), data["weight"])
                      for a, b, data in self.graph.edges(data=True))

    def total_weight(self) -> int:
        return int(self.graph.size(weight="weight"))

    def isolates(self) -> List[int]:
        return sorted(nx.isolates(self.graph))

    def to_frame(self) -> pd.DataFrame:
        start, end = self.window
        rows = [(a, b, w, start, end) for a, b, w in self.edges()]
        return pd.DataFrame(rows, columns=NETWORK_COLUMNS)


@dataclass
class NetworkStats:
    network: InteractionNetwork
    effective_rates: Dict[int, float]

    @property
    def isolates(self) -> List[int]:
        return self.network.isolates()


def _check_sorted(events: Sequence[InteractionEvent]) -> None:
    for previous, current in zip(events, events[1:]):
        if current.t < previous.t:
            raise PreconditionError(f"events must be time-sorted (t={current.t} after t={previous.t})")


def _in_window(events: Sequence[InteractionEvent], window: Tuple[float, float]):
    start, end = window
    return (e for e in events if start <= e.t <= end)


def _resolve_window(events: Sequence[InteractionEvent],
                    window: Optional[Tuple[float, float]]) -> Tuple[float, float]:
    if window is not None:
        return float(window[0]), float(window[1])
    if not events:
        return 0.0, 0.0
    return float(events[0].t), float(events[-1].t)


def build_network(events: Sequence[InteractionEvent], robot_ids: Iterable[int],
                  window: Optional[Tuple[float, float]] = None) -> InteractionNetwork:
    """Count every logged meeting (effective or not) between each pair in the window."""
    events = list(events)
    _check_sorted(events)
    window = _resolve_window(events, window)
    graph = nx.Graph()
    graph.add_nodes_from(int(i) for i in robot_ids)
    for event in _in_window(events, window):
        if graph.has_edge(event.id_a, event.id_b):
            graph[event.id_a][event.id_b]["weight"] += 1
        else:
            graph.add_edge(event.id_a, event.id_b, weight=1)
    return InteractionNetwork(graph, window)


def effective_rates(events: Sequence[InteractionEvent], robot_ids: Iterable[int],
                    window: Tuple[float, float]) -> Dict[int, float]:
    """Effective meetings per robot divided by the window length."""
    start, end = window
    span = end - start
    counts = {int(i): 0 for i in robot_ids}
    for event in _in_window(events, window):
        if event.effective:
            counts[event.id_a] = counts.get(event.id_a, 0) + 1
            counts[event.id_b] = counts.get(event.id_b, 0) + 1
    if span <= 0:
        return {robot: 0.0 for robot in counts}
    return {robot: count / span for robot, count in counts.items()}


def network_stats(events: Sequence[InteractionEvent], robot_ids: Iterable[int],
                  window: Optional[Tuple[float, float]] = None) -> NetworkStats:
    robot_ids = list(robot_ids)
    network = build_network(events, robot_ids, window)
    rates = effective_rates(events, robot_ids, network.window)
    logger.debug("network %s: %d edges, %d isolates", network.window,
                 network.graph.number_of_edges(), len(network.isolates()))
    return NetworkStats(network, rates)
