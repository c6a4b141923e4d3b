"""Depth/chronology layout and deterministic DOT / JSON serialization.

X is a node's generation depth; Y is its chronological rank among the
nodes sharing that depth.
"""

import json
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from . import __version__
from .models import AssetNode, GraphStats, LineageEdge, WorkflowGraph
from .sequence_miner import MiningResult, TransitionModel
from .util import format_percent, format_timestamp, parse_timestamp

__all__ = [
    "LayoutedGraph",
    "SHAPES",
    "COLORS",
    "layout",
    "to_dot",
    "to_json",
    "mining_to_json",
    "graph_from_json",
]

SHAPES = {
    "generated": "box",
    "manual": "ellipse",
}
COLORS = {
    "image": "lightblue",
    "video": "lightgreen",
    "prompt": "pink",
}
FALLBACK_COLOR = "gray"


@dataclass(frozen=True)
class LayoutedGraph:
    graph: WorkflowGraph
    coords: Dict[str, Tuple[int, int]]

    def ordered_nodes(self):
        return sorted(self.graph.nodes.values(), key=lambda n: (self.coords[n.node_id][0], self.coords[n.node_id][1]))


def layout(graph: WorkflowGraph) -> LayoutedGraph:
    levels = defaultdict(list)
    for node in graph.nodes.values():
        levels[node.depth].append(node)

    coords = {}
    for depth, nodes in levels.items():
        nodes.sort(key=lambda n: (n.created_at, n.created_global_seq, n.node_id))
        for rank, node in enumerate(nodes):
            coords[node.node_id] = (depth, rank)
    return LayoutedGraph(graph, coords)


def _gvquote(s):
    return '"{}"'.format(s.replace("\\", "\\\\").replace('"', r'\"'))


def _label(node: AssetNode) -> str:
    lines = [f"#{node.created_global_seq}"]
    if node.modify_seqs:
        lines.append("M:" + ",".join(str(s) for s in node.modify_seqs))
    if node.remove_seq is not None:
        lines.append(f"R:{node.remove_seq}")
    return r"\n".join(lines)


def to_dot(lg: LayoutedGraph) -> str:
    out = [f"digraph {_gvquote(lg.graph.session_id)} {{\n", "  node [style=filled];\n"]
    for node in lg.ordered_nodes():
        x, y = lg.coords[node.node_id]
        out.append('  {} [label="{}", shape={}, fillcolor={}, pos="{},{}!"];\n'.format(
            _gvquote(node.node_id),
            _label(node),
            SHAPES[node.origin],
            COLORS.get(node.kind, FALLBACK_COLOR),
            x,
            -y,
        ))
    for edge in sorted(lg.graph.edges):
        out.append(f"  {_gvquote(edge.parent_id)} -> {_gvquote(edge.child_id)};\n")
    out.append("}\n")
    return "".join(out)


def _node_json(node: AssetNode, coords: Tuple[int, int]) -> dict:
    return {
        "node_id": node.node_id,
        "kind": node.kind,
        "origin": node.origin,
        "created_global_seq": node.created_global_seq,
        "created_at": format_timestamp(node.created_at),
        "depth": node.depth,
        "modify_seqs": list(node.modify_seqs),
        "remove_seq": node.remove_seq,
        "placeholder": node.placeholder,
        "x": coords[0],
        "y": coords[1],
    }


def _gram_json(gram, count, share) -> dict:
    return {
        "tokens": list(gram),
        "count": count,
        "share": share,
        "display": format_percent(share),
    }


def ngram_section(mining: MiningResult) -> dict:
    section = {}
    for n, table in sorted(mining.tables.items()):
        ranked = sorted(table.counts.items(), key=lambda item: (-item[1], item[0]))
        section[str(n)] = {
            "n": n,
            "total": table.total,
            "counts": [_gram_json(g, c, c / table.total) for g, c in ranked],
            "top": [_gram_json(g, c, s) for g, c, s in mining.top[n]],
        }
    return section


def transition_section(model: TransitionModel) -> dict:
    return {
        "states": list(model.states),
        "matrix": [
            {
                "from": a,
                "to": b,
                "count": count,
                "probability": model.transition_probs[(a, b)],
                "display": format_percent(model.transition_probs[(a, b)]),
            }
            for (a, b), count in sorted(model.transition_counts.items())
        ],
    }


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _meta(session_id=None) -> dict:
    meta = {"tool": "mimir", "version": __version__}
    if session_id is not None:
        meta["session_id"] = session_id
    return meta


def to_json(lg: LayoutedGraph, stats: Optional[GraphStats] = None, mining: Optional[MiningResult] = None,
            digest=None) -> str:
    """Renders the structured document: graph, statistics, mining output and digest."""
    return _dumps({
        "meta": _meta(lg.graph.session_id),
        "nodes": [_node_json(n, lg.coords[n.node_id]) for n in lg.ordered_nodes()],
        "edges": [{"parent": e.parent_id, "child": e.child_id} for e in sorted(lg.graph.edges)],
        "stats": stats.todict() if stats is not None else None,
        "ngrams": ngram_section(mining) if mining is not None else None,
        "transitions": transition_section(mining.model) if mining is not None else None,
        "digest": digest.todict() if digest is not None else None,
    })


def mining_to_json(mining: MiningResult) -> str:
    return _dumps({
        "meta": _meta(),
        "ngrams": ngram_section(mining),
        "transitions": transition_section(mining.model),
    })


def graph_from_json(text: str) -> LayoutedGraph:
    """Reads the graph part of a document written by :func:`to_json`."""
    doc = json.loads(text)
    nodes = {}
    coords = {}
    for item in doc["nodes"]:
        node = AssetNode(
            node_id=item["node_id"],
            kind=item["kind"],
            origin=item["origin"],
            created_global_seq=item["created_global_seq"],
            created_at=parse_timestamp(item["created_at"]),
            depth=item["depth"],
            modify_seqs=tuple(item["modify_seqs"]),
            remove_seq=item["remove_seq"],
            placeholder=item.get("placeholder", False),
        )
        nodes[node.node_id] = node
        coords[node.node_id] = (item["x"], item["y"])
    edges = tuple(sorted(LineageEdge(e["parent"], e["child"]) for e in doc["edges"]))
    graph = WorkflowGraph(session_id=doc["meta"].get("session_id", ""), nodes=nodes, edges=edges)
    return LayoutedGraph(graph, coords)
