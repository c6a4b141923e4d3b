"""Provenance DAG reconstruction from classified design moves.

Nodes are creative assets created by INSERT (manual) or GENERATION
(generated) moves; edges follow each node's ``connected_from`` parents.
MODIFY and REMOVE moves annotate nodes with session-wide sequence numbers
and never change the graph's shape.
"""

import logging
from collections import Counter
from dataclasses import replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from .errors import (CycleDetected, DanglingParent, DuplicateNode, GraphError, ModifyAfterRemove,
                     ModifyUnknownNode, NodeAlreadyRemoved)
from .models import DEFAULT_KIND, AssetNode, DesignMove, GraphStats, LineageEdge, MoveKind, WorkflowGraph

__all__ = [
    "build_graph",
    "graph_stats",
    "find_cycle",
    "to_networkx",
    "ancestors",
    "descendants",
]

log = logging.getLogger(__name__)


def _recover(strict: bool, error: GraphError):
    if strict:
        raise error
    log.warning("%s: %s", type(error).__name__, error)


def to_networkx(nodes: Iterable[str], edges: Iterable[LineageEdge]) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(nodes)
    g.add_edges_from((e.parent_id, e.child_id) for e in edges)
    return g


def find_cycle(nodes: Iterable[str], edges: Iterable[LineageEdge]) -> Optional[Tuple[str, ...]]:
    """Returns one cycle as a closed node path, or None when the edges form a DAG."""
    try:
        cycle = nx.find_cycle(to_networkx(nodes, edges))
    except nx.NetworkXNoCycle:
        return None
    return tuple(u for u, _ in cycle) + (cycle[0][0],)


def build_graph(moves: Sequence[DesignMove], strict: bool = True, session_id: Optional[str] = None) -> WorkflowGraph:
    if session_id is None:
        session_id = moves[0].event.session_id if moves else ""

    nodes: Dict[str, AssetNode] = {}
    parents: Dict[str, Tuple[str, ...]] = {}
    modify_seq = 0
    remove_seq = 0

    for move in moves:
        event = move.event
        node_id = event.node_id or ""

        if move.move in (MoveKind.INSERT, MoveKind.GENERATION):
            if not node_id:
                _recover(strict, GraphError(f"move #{move.global_seq} creates a node without a node_id"))
                continue
            if node_id in nodes:
                _recover(strict, DuplicateNode(node_id))
                continue
            nodes[node_id] = AssetNode(
                node_id=node_id,
                kind=event.node_kind or DEFAULT_KIND,
                origin="generated" if move.move is MoveKind.GENERATION else "manual",
                created_global_seq=move.global_seq,
                created_at=event.timestamp,
            )
            parents[node_id] = tuple(dict.fromkeys(p for p in event.connected_from if p != node_id))

        elif move.move is MoveKind.MODIFY:
            modify_seq += 1
            node = nodes.get(node_id)
            if node is None:
                _recover(strict, ModifyUnknownNode(node_id))
                continue
            if node.remove_seq is not None:
                _recover(strict, ModifyAfterRemove(node_id))
            nodes[node_id] = replace(node, modify_seqs=node.modify_seqs + (modify_seq,))

        elif move.move is MoveKind.REMOVE:
            remove_seq += 1
            node = nodes.get(node_id)
            if node is None:
                _recover(strict, ModifyUnknownNode(node_id))
                continue
            if node.remove_seq is not None:
                _recover(strict, NodeAlreadyRemoved(node_id))
                continue
            nodes[node_id] = replace(node, remove_seq=remove_seq)

    edges = set()
    for child_id, parent_ids in list(parents.items()):
        for parent_id in parent_ids:
            if parent_id not in nodes:
                _recover(strict, DanglingParent(parent_id, child_id))
                child = nodes[child_id]
                nodes[parent_id] = AssetNode(
                    node_id=parent_id,
                    kind=DEFAULT_KIND,
                    origin="manual",
                    created_global_seq=0,
                    created_at=child.created_at,
                    placeholder=True,
                )
            edges.add(LineageEdge(parent_id, child_id))
    edges = tuple(sorted(edges))

    cycle = find_cycle(nodes, edges)
    if cycle is not None:
        raise CycleDetected(cycle)

    g = to_networkx(nodes, edges)
    for node_id in nx.topological_sort(g):
        preds = list(g.predecessors(node_id))
        if preds:
            depth = 1 + max(nodes[p].depth for p in preds)
            nodes[node_id] = replace(nodes[node_id], depth=depth)

    graph = WorkflowGraph(session_id=session_id, nodes=nodes, edges=edges)
    log.info("Built graph for %s: %d nodes, %d edges, max depth %d",
             session_id, len(nodes), len(edges), graph.max_depth)
    return graph


def graph_stats(graph: WorkflowGraph) -> GraphStats:
    out_degree = Counter(e.parent_id for e in graph.edges)
    per_depth = Counter(n.depth for n in graph.nodes.values())
    widest = min(per_depth, key=lambda d: (-per_depth[d], d)) if per_depth else 0
    return GraphStats(
        node_count=len(graph.nodes),
        edge_count=len(graph.edges),
        max_depth=graph.max_depth,
        branch_count=sum(1 for n in graph.nodes if out_degree[n] >= 2),
        leaf_count=sum(1 for n in graph.nodes if out_degree[n] == 0),
        widest_depth=widest,
    )


def ancestors(graph: WorkflowGraph, node_id: str) -> List[str]:
    """Every node whose data flows into `node_id`."""
    return sorted(nx.ancestors(to_networkx(graph.nodes, graph.edges), node_id))


def descendants(graph: WorkflowGraph, node_id: str) -> List[str]:
    """Every node derived, directly or not, from `node_id`."""
    return sorted(nx.descendants(to_networkx(graph.nodes, graph.edges), node_id))
