"""Deterministic synthetic session logs with declared ground truth.

Every corpus is produced through a :class:`SessionBuilder`, which writes
raw events and, alongside them, the moves, graph, filter counts and tokens
the pipeline is expected to reconstruct.

The ``pilot_*`` corpora are constructed to match published aggregate
statistics of a private pilot dataset; they are not that dataset.
"""

import json
import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidSpec
from .event_ingest import dump_events
from .graph_export import layout, to_json
from .lineage_graph import graph_stats
from .models import AssetNode, DesignMove, LineageEdge, MoveKind, RawEvent, SessionLog, TokenSequence, WorkflowGraph
from .semantic_filter import FilterReport
from .tokenizer import make_token

__all__ = [
    "ScenarioSpec",
    "GroundTruth",
    "SessionBuilder",
    "NOISE_VARIANTS",
    "generate",
    "reference_fixtures",
    "paper_fixtures",
    "figure1_like",
    "pilot_bigrams",
    "pilot_927",
    "truth_to_json",
    "write_corpus",
]

log = logging.getLogger(__name__)

BASE_TIME = datetime(2024, 1, 1, tzinfo=timezone.utc)

# (action_type, raw_source_label, discard reason under the default rules)
NOISE_VARIANTS = (
    ("temp_cache_purge", "cache_manager", "cleanup"),
    ("edge_rerouted", "graph_router", "rerouting"),
    ("generation_progress", "progress_stream", "async_state"),
    ("node_deleted", "cache_gc", "cleanup"),
    ("state_update", "intermediate_preview", "async_state"),
    ("connection_reroute", "backend", "rerouting"),
    ("asset_cleanup", "gc", "cleanup"),
    ("state_update", "async_sync", "async_state"),
)

MODIFY_ACTIONS = ("prompt_edited", "parameter_changed", "metadata_updated")


@dataclass(frozen=True)
class ScenarioSpec:
    seed: int = 42
    n_roots: int = 2
    branch_factor_range: Tuple[int, int] = (1, 3)
    chain_depth_range: Tuple[int, int] = (1, 4)
    noise_ratio: float = 0.3
    move_mix: Mapping[MoveKind, float] = field(default_factory=lambda: {
        MoveKind.INSERT: 0.15,
        MoveKind.MODIFY: 0.25,
        MoveKind.GENERATION: 0.5,
        MoveKind.REMOVE: 0.1,
    })
    kinds_mix: Mapping[str, float] = field(default_factory=lambda: {
        "prompt": 0.3,
        "image": 0.5,
        "video": 0.2,
    })
    max_events: int = 200
    session_id: Optional[str] = None

    def validate(self):
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidSpec(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.n_roots < 1:
            raise InvalidSpec("n_roots must be >= 1")
        for name in ("branch_factor_range", "chain_depth_range"):
            lo, hi = getattr(self, name)
            if lo < 0 or lo > hi:
                raise InvalidSpec(f"{name} is empty: {lo}..{hi}")
        if not 0 <= self.noise_ratio < 1:
            raise InvalidSpec(f"noise_ratio must be in [0, 1), got {self.noise_ratio}")
        if self.max_events < 1:
            raise InvalidSpec("max_events must be >= 1")
        for name in ("move_mix", "kinds_mix"):
            mix = getattr(self, name)
            if not mix or any(p < 0 for p in mix.values()) or abs(sum(mix.values()) - 1) > 1e-9:
                raise InvalidSpec(f"{name} proportions must be non-negative and sum to 1")
        if set(self.move_mix) - set(MoveKind):
            raise InvalidSpec("move_mix keys must be move kinds")
        if any(not k or k != k.lower() or "_" in k for k in self.kinds_mix):
            raise InvalidSpec("asset kinds must be non-empty lowercase names without underscores")


@dataclass(frozen=True)
class GroundTruth:
    moves: Tuple[DesignMove, ...]
    graph: WorkflowGraph
    report: FilterReport
    tokens: TokenSequence


class SessionBuilder:
    """Writes events for scripted design moves and tracks what they should reconstruct to."""

    def __init__(self, session_id: str, start: datetime = BASE_TIME, step: Callable[[], int] = lambda: 1000):
        self.session_id = session_id
        self.events: List[RawEvent] = []
        self.moves: List[DesignMove] = []
        self.nodes: Dict[str, AssetNode] = {}
        self.edges: List[LineageEdge] = []
        self.discarded = Counter()
        self._clock = start
        self._step = step
        self._modify_seq = 0
        self._remove_seq = 0

    def _event(self, action, source, node_id=None, kind="other", parents=(), origin="user", payload=""):
        if self.events:
            self._clock += timedelta(milliseconds=self._step())
        event = RawEvent(
            event_id=f"{self.session_id}-{len(self.events):04d}",
            timestamp=self._clock,
            session_id=self.session_id,
            action_type=action,
            raw_source_label=source,
            node_id=node_id,
            node_kind=kind,
            connected_from=tuple(parents),
            origin=origin,
            payload=payload,
        )
        self.events.append(event)
        return event

    def _keep(self, move: MoveKind, event: RawEvent) -> DesignMove:
        dm = DesignMove(move, event, global_seq=len(self.moves) + 1)
        self.moves.append(dm)
        return dm

    def _create(self, move: MoveKind, node_id: str, kind: str, parents: Sequence[str], event: RawEvent):
        dm = self._keep(move, event)
        depth = 1 + max(self.nodes[p].depth for p in parents) if parents else 0
        self.nodes[node_id] = AssetNode(
            node_id=node_id,
            kind=kind,
            origin="generated" if move is MoveKind.GENERATION else "manual",
            created_global_seq=dm.global_seq,
            created_at=event.timestamp,
            depth=depth,
        )
        self.edges.extend(LineageEdge(p, node_id) for p in parents)

    def insert(self, node_id: str, kind: str, parents: Sequence[str] = (), imported: bool = False):
        action, source = ("asset_imported", "upload") if imported else ("node_created", "canvas")
        event = self._event(action, source, node_id, kind, parents)
        self._create(MoveKind.INSERT, node_id, kind, parents, event)

    def generate(self, node_id: str, kind: str, parents: Sequence[str]):
        event = self._event("generation_executed", "model_runner", node_id, kind, parents, origin="generated",
                            payload=f'{{"model": "diffusion", "seed": {len(self.events)}}}')
        self._create(MoveKind.GENERATION, node_id, kind, parents, event)

    def modify(self, node_id: str, action: str = "parameter_changed"):
        node = self.nodes[node_id]
        event = self._event(action, "inspector", node_id, node.kind,
                            payload=f'{{"field": "{action.split("_")[0]}", "note": "tweak, again"}}')
        self._keep(MoveKind.MODIFY, event)
        self._modify_seq += 1
        self.nodes[node_id] = replace(node, modify_seqs=node.modify_seqs + (self._modify_seq,))

    def remove(self, node_id: str):
        node = self.nodes[node_id]
        event = self._event("node_deleted", "canvas", node_id, node.kind)
        self._keep(MoveKind.REMOVE, event)
        self._remove_seq += 1
        self.nodes[node_id] = replace(node, remove_seq=self._remove_seq)

    def noise(self, variant: int = 0):
        action, source, reason = NOISE_VARIANTS[variant % len(NOISE_VARIANTS)]
        node_id = f"tmp{len(self.events)}" if reason == "cleanup" else None
        self._event(action, source, node_id, origin="system")
        self.discarded[reason] += 1

    def session(self) -> SessionLog:
        return SessionLog(self.session_id, tuple(self.events), "csv")

    def truth(self) -> GroundTruth:
        kept = Counter(m.move for m in self.moves)
        report = FilterReport(
            input_count=len(self.events),
            kept_count=len(self.moves),
            discarded_count=sum(self.discarded.values()),
            discarded_by_reason=dict(sorted(self.discarded.items())),
            kept_by_move={m: kept[m] for m in MoveKind if kept[m]},
        )
        tokens = TokenSequence(self.session_id, tuple(make_token(m.move, m.event.node_kind) for m in self.moves))
        graph = WorkflowGraph(self.session_id, dict(self.nodes), tuple(sorted(set(self.edges))))
        return GroundTruth(tuple(self.moves), graph, report, tokens)


def generate(spec: ScenarioSpec) -> Tuple[SessionLog, GroundTruth]:
    spec.validate()
    structure_seed, noise_seed, clock_seed = np.random.SeedSequence(spec.seed).spawn(3)
    rng = np.random.default_rng(structure_seed)
    noise_rng = np.random.default_rng(noise_seed)
    clock_rng = np.random.default_rng(clock_seed)

    b = SessionBuilder(spec.session_id or f"synth-{spec.seed}", step=lambda: int(clock_rng.integers(1, 4000)))
    kinds = list(spec.kinds_mix)
    kind_p = np.array([spec.kinds_mix[k] for k in kinds], dtype=float)
    move_kinds = list(spec.move_mix)
    move_p = np.array([spec.move_mix[m] for m in move_kinds], dtype=float)

    def room():
        return len(b.events) < spec.max_events

    def pick_kind():
        return kinds[rng.choice(len(kinds), p=kind_p / kind_p.sum())]

    def new_id():
        return f"n{len(b.nodes)}"

    def maybe_noise():
        while room() and noise_rng.random() < spec.noise_ratio:
            b.noise(int(noise_rng.integers(len(NOISE_VARIANTS))))

    def live():
        return [n for n, node in b.nodes.items() if node.remove_seq is None]

    roots = []
    for _ in range(spec.n_roots):
        maybe_noise()
        if not room():
            break
        node_id = new_id()
        b.insert(node_id, pick_kind(), imported=bool(rng.random() < 0.3))
        roots.append(node_id)

    chains = []
    lo, hi = spec.branch_factor_range
    dlo, dhi = spec.chain_depth_range
    for root in roots:
        for _ in range(int(rng.integers(lo, hi + 1))):
            chains.append([root, int(rng.integers(dlo, dhi + 1))])
    chains = [c for c in chains if c[1] > 0]

    while chains:
        maybe_noise()
        if not room():
            break
        move = MoveKind(move_kinds[rng.choice(len(move_kinds), p=move_p / move_p.sum())])
        targets = live()

        if move is MoveKind.INSERT:
            parents = ()
            if rng.random() < 0.3:
                parents = (list(b.nodes)[int(rng.integers(len(b.nodes)))],)
            b.insert(new_id(), pick_kind(), parents, imported=bool(rng.random() < 0.3))
        elif move is MoveKind.MODIFY and targets:
            target = targets[int(rng.integers(len(targets)))]
            if b.nodes[target].kind == "prompt":
                action = "prompt_edited"
            else:
                action = MODIFY_ACTIONS[1 + int(rng.integers(2))]
            b.modify(target, action)
        elif move is MoveKind.REMOVE and targets:
            b.remove(targets[int(rng.integers(len(targets)))])
        else:
            chain = chains[int(rng.integers(len(chains)))]
            parents = [chain[0]]
            if rng.random() < 0.25 and len(b.nodes) > 1:
                extra = list(b.nodes)[int(rng.integers(len(b.nodes)))]
                if extra != chain[0]:
                    parents.append(extra)
            node_id = new_id()
            b.generate(node_id, pick_kind(), parents)
            chain[0] = node_id
            chain[1] -= 1
            chains = [c for c in chains if c[1] > 0]

    log.info("Generated %s: %d events, %d moves", b.session_id, len(b.events), len(b.moves))
    return b.session(), b.truth()


# Pilot corpora
#
# 19 segments, each: INSERT_prompt MODIFY_prompt MODIFY_prompt, an image
# setup core, a run of GENERATION_image, GENERATION_video, REMOVE_image.
# A final MODIFY_prompt closes the stream: 195 tokens, 194 bigrams,
# GENERATION_image -> GENERATION_image 37 of 56 outgoing, INSERT_image ->
# MODIFY_image 16 of 23 outgoing.

GENERATION_RUNS = (2, 3, 4, 3, 2, 5, 3, 2, 3, 4, 1, 3, 2, 6, 3, 2, 3, 2, 3)
DOUBLE_INSERT_SEGMENTS = frozenset({2, 7, 12, 17})
DIRECT_SEGMENTS = frozenset({4, 10, 15})


def _pilot_ops(tag: str = "") -> List[tuple]:
    ops = []
    for k, run in enumerate(GENERATION_RUNS):
        prompt = f"{tag}p{k}"
        ops += [
            ("insert", prompt, "prompt", ()),
            ("modify", prompt, "prompt_edited"),
            ("modify", prompt, "prompt_edited"),
        ]
        if k in DOUBLE_INSERT_SEGMENTS:
            first, ref = f"{tag}i{k}a", f"{tag}i{k}b"
            ops += [
                ("insert", first, "image", ()),
                ("insert", ref, "image", ()),
                ("modify", first, "parameter_changed"),
                ("modify", ref, "metadata_updated"),
            ]
        elif k in DIRECT_SEGMENTS:
            ref = f"{tag}i{k}"
            ops.append(("insert", ref, "image", ()))
        else:
            ref = f"{tag}i{k}"
            ops += [
                ("insert", ref, "image", ()),
                ("modify", ref, "metadata_updated"),
            ]

        generated = []
        for j in range(run):
            node_id = f"{tag}g{k}_{j}"
            parents = (prompt, ref) if not generated else (generated[-1],)
            ops.append(("generate", node_id, "image", parents))
            generated.append(node_id)
        ops += [
            ("generate", f"{tag}v{k}", "video", (generated[-1],)),
            ("remove", generated[0]),
        ]
    ops.append(("modify", f"{tag}p{len(GENERATION_RUNS) - 1}", "prompt_edited"))
    return ops


def _run_op(b: SessionBuilder, op: tuple):
    verb, node_id, *args = op
    if verb == "insert":
        kind, parents = args
        b.insert(node_id, kind, parents, imported=(kind == "image"))
    elif verb == "generate":
        kind, parents = args
        b.generate(node_id, kind, parents)
    elif verb == "modify":
        b.modify(node_id, args[0])
    elif verb == "remove":
        b.remove(node_id)


def pilot_bigrams(session_id: str = "pilot_bigrams") -> Tuple[SessionLog, GroundTruth]:
    b = SessionBuilder(session_id)
    for op in _pilot_ops():
        _run_op(b, op)
    return b.session(), b.truth()


def pilot_927(session_id: str = "pilot_927") -> Tuple[SessionLog, GroundTruth]:
    """927 raw events of which 563 survive the default rules."""
    signal = _pilot_ops("r0.") + _pilot_ops("r1.") + _pilot_ops("r2.")
    signal = signal[:563]
    noise_slots = set(np.random.default_rng(927).choice(927, size=364, replace=False).tolist())

    b = SessionBuilder(session_id)
    ops = iter(signal)
    for slot in range(927):
        if slot in noise_slots:
            b.noise(slot)
        else:
            _run_op(b, next(ops))
    return b.session(), b.truth()


def figure1_like(session_id: str = "figure1_like") -> Tuple[SessionLog, GroundTruth]:
    """A prompt fanning out into parallel variations that converge on one lineage ending in video."""
    b = SessionBuilder(session_id, start=datetime(2024, 5, 1, 9, tzinfo=timezone.utc))
    b.insert("prompt_1", "prompt")
    b.modify("prompt_1", "prompt_edited")
    b.generate("image_1", "image", ("prompt_1",))
    b.noise(2)
    b.generate("image_2", "image", ("prompt_1",))
    b.generate("image_3", "image", ("prompt_1",))
    b.noise(0)
    b.remove("image_2")
    b.insert("ref_1", "image", imported=True)
    b.modify("ref_1", "parameter_changed")
    b.generate("image_4", "image", ("image_3", "ref_1"))
    b.noise(1)
    b.modify("prompt_1", "prompt_edited")
    b.generate("image_5", "image", ("image_4",))
    b.remove("image_1")
    b.noise(3)
    b.generate("image_6", "image", ("image_5", "prompt_1"))
    b.generate("video_1", "video", ("image_6",))
    b.modify("video_1", "parameter_changed")
    b.generate("video_2", "video", ("video_1",))
    b.modify("video_2", "metadata_updated")
    return b.session(), b.truth()


def reference_fixtures() -> Dict[str, Tuple[SessionLog, GroundTruth]]:
    return {
        "pilot_927": pilot_927(),
        "pilot_bigrams": pilot_bigrams(),
        "pilot_transitions": pilot_bigrams("pilot_transitions"),
        "figure1_like": figure1_like(),
    }


paper_fixtures = reference_fixtures


def truth_to_json(truth: GroundTruth) -> str:
    doc = json.loads(to_json(layout(truth.graph), graph_stats(truth.graph)))
    doc["report"] = truth.report.todict()
    doc["tokens"] = list(truth.tokens.texts)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_corpus(out_fs, name: str, session: SessionLog, truth: GroundTruth, fmt: str = "csv"):
    out_fs.writetext(f"{name}.{fmt}", dump_events(session, fmt))
    out_fs.writetext(f"{name}.truth.json", truth_to_json(truth))
