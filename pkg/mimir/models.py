from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import datetime
from typing import Dict, Optional, Tuple

__all__ = [
    "ORIGINS",
    "DEFAULT_KIND",
    "RawEvent",
    "ParseReport",
    "SessionLog",
    "MoveKind",
    "DesignMove",
    "AssetNode",
    "LineageEdge",
    "WorkflowGraph",
    "GraphStats",
    "BehavioralToken",
    "TokenSequence",
]

ORIGINS = ("user", "system", "generated")
DEFAULT_KIND = "other"


@dataclass(frozen=True)
class RawEvent:
    event_id: str
    timestamp: datetime
    session_id: str
    action_type: str
    raw_source_label: str = ""
    node_id: Optional[str] = None
    node_kind: str = DEFAULT_KIND
    connected_from: Tuple[str, ...] = ()
    origin: str = "user"
    payload: str = ""


@dataclass(frozen=True)
class ParseReport:
    records: int = 0
    skipped: int = 0
    duplicates: int = 0
    errors: Tuple[str, ...] = ()


@dataclass(frozen=True)
class SessionLog:
    session_id: str
    events: Tuple[RawEvent, ...]
    source_format: str = "csv"
    report: ParseReport = field(default=ParseReport(), compare=False)

    def __len__(self):
        return len(self.events)


class MoveKind(str, enum.Enum):
    INSERT = "INSERT"
    MODIFY = "MODIFY"
    GENERATION = "GENERATION"
    REMOVE = "REMOVE"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class DesignMove:
    move: MoveKind
    event: RawEvent
    global_seq: int


@dataclass(frozen=True)
class AssetNode:
    node_id: str
    kind: str
    origin: str  # "generated" renders as a square, "manual" as a circle
    created_global_seq: int
    created_at: datetime
    depth: int = 0
    modify_seqs: Tuple[int, ...] = ()
    remove_seq: Optional[int] = None
    placeholder: bool = False


@dataclass(frozen=True, order=True)
class LineageEdge:
    parent_id: str
    child_id: str


@dataclass(frozen=True)
class WorkflowGraph:
    session_id: str
    nodes: Dict[str, AssetNode]
    edges: Tuple[LineageEdge, ...]

    @property
    def max_depth(self) -> int:
        return max((n.depth for n in self.nodes.values()), default=0)


@dataclass(frozen=True)
class GraphStats:
    node_count: int
    edge_count: int
    max_depth: int
    branch_count: int
    leaf_count: int
    widest_depth: int

    def todict(self):
        return {
            "node_count": self.node_count,
            "edge_count": self.edge_count,
            "max_depth": self.max_depth,
            "branch_count": self.branch_count,
            "leaf_count": self.leaf_count,
            "widest_depth": self.widest_depth,
        }


@dataclass(frozen=True)
class BehavioralToken:
    move: MoveKind
    asset_kind: str

    @property
    def text(self) -> str:
        return f"{self.move.value}_{self.asset_kind}"

    def __str__(self):
        return self.text


@dataclass(frozen=True)
class TokenSequence:
    session_id: str
    tokens: Tuple[BehavioralToken, ...]

    @property
    def texts(self) -> Tuple[str, ...]:
        return tuple(t.text for t in self.tokens)

    def __len__(self):
        return len(self.tokens)
