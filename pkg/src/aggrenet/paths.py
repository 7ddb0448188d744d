"""Shortest paths and K shortest loopless paths under surrogate arc costs.

Ties between equal-cost paths are broken by the lexicographic order of the
node sequence, so every downstream construction that consumes path sets is
reproducible.  Path costs are always accumulated left to right along the
path; comparisons are exact on the resulting floats.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .errors import Unreachable
from .instances import Instance


@dataclass(frozen=True)
class Path:
    """A loopless directed path: arc indices, visited nodes, total cost."""

    arcs: tuple[int, ...]
    nodes: tuple[int, ...]
    cost: float

    @property
    def origin(self) -> int:
        return self.nodes[0]

    @property
    def destination(self) -> int:
        return self.nodes[-1]


def surrogate_costs(inst: Instance) -> list[float]:
    """Per-arc cost blending flow cost, fixed cost and capacity: c + f/u."""
    return [a.flow_cost + a.fixed_cost / a.capacity for a in inst.arcs]


def path_cost(costs, arc_seq) -> float:
    """Canonical left-to-right cost of an arc sequence."""
    total = 0.0
    for arc_idx in arc_seq:
        total += costs[arc_idx]
    return total


def _search(inst, costs, origin, destination, banned_nodes=(), banned_arcs=()):
    """Best-first search over simple paths, keyed by (cost, node sequence).

    Labels strictly costlier than the best settled label of their end node are
    pruned; equal-cost labels are kept so the lexicographic minimum among tied
    paths is returned exactly.
    """
    banned_nodes = frozenset(banned_nodes)
    banned_arcs = frozenset(banned_arcs)
    if origin in banned_nodes or destination in banned_nodes:
        return None
    adj = inst.adjacency
    best = {}
    heap = [(0.0, (origin,), ())]
    while heap:
        cost, nodes, arcs = heapq.heappop(heap)
        node = nodes[-1]
        if node == destination:
            return Path(arcs, nodes, cost)
        prev = best.get(node)
        if prev is not None and cost > prev:
            continue
        if prev is None:
            best[node] = cost
        for arc_idx in adj.successors[node]:
            if arc_idx in banned_arcs:
                continue
            head = inst.arcs[arc_idx].head
            if head in banned_nodes or head in nodes:
                continue
            new_cost = cost + costs[arc_idx]
            settled = best.get(head)
            if settled is not None and new_cost > settled:
                continue
            heapq.heappush(heap, (new_cost, nodes + (head,), arcs + (arc_idx,)))
    return None


def shortest_path(inst: Instance, costs, origin: int, destination: int) -> Path:
    """Minimum-cost loopless path; lexicographically smallest among ties.

    Raises Unreachable when no path exists.
    """
    if origin == destination:
        return Path((), (origin,), 0.0)
    found = _search(inst, costs, origin, destination)
    if found is None:
        raise Unreachable(origin, destination)
    return found


def k_shortest_paths(inst: Instance, costs, origin: int, destination: int, k: int) -> list[Path]:
    """The ``k`` cheapest loopless origin->destination paths, nondecreasing.

    Deviation search over previously found paths, with spur candidates
    deduplicated by node sequence.  Fewer than ``k`` paths are returned when
    the graph holds fewer simple paths; ``k = 0`` yields an empty list without
    touching the graph.
    """
    if k <= 0:
        return []
    results = [shortest_path(inst, costs, origin, destination)]
    candidates: list[tuple[float, tuple[int, ...], Path]] = []
    seen = {results[0].nodes}

    while len(results) < k:
        prev = results[-1]
        for i in range(len(prev.nodes) - 1):
            spur_node = prev.nodes[i]
            root_nodes = prev.nodes[: i + 1]
            root_arcs = prev.arcs[:i]
            banned_arcs = {
                p.arcs[i]
                for p in results
                if len(p.arcs) > i and p.nodes[: i + 1] == root_nodes
            }
            banned_nodes = set(root_nodes[:-1])
            spur = _search(inst, costs, spur_node, destination, banned_nodes, banned_arcs)
            if spur is None:
                continue
            arc_seq = root_arcs + spur.arcs
            node_seq = root_nodes + spur.nodes[1:]
            if node_seq in seen:
                continue
            seen.add(node_seq)
            total = path_cost(costs, arc_seq)
            heapq.heappush(
                candidates, (total, node_seq, Path(arc_seq, node_seq, total))
            )
        if not candidates:
            break
        _, _, best = heapq.heappop(candidates)
        results.append(best)
    return results
