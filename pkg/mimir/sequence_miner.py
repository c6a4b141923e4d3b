"""N-gram counts, first-order Markov transitions and phase labels over token streams."""

import enum
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple, Union

from .errors import EmptyWindow, InvalidN, InvalidParams, UnknownState
from .models import MoveKind, TokenSequence

__all__ = [
    "NGramTable",
    "TransitionModel",
    "PhaseLabel",
    "MiningResult",
    "count_ngrams",
    "top_ngrams",
    "build_markov",
    "transition_prob",
    "predict_next",
    "classify_phase",
    "phase_timeline",
    "mine",
]

log = logging.getLogger(__name__)

Gram = Tuple[str, ...]
Sequences = Union[TokenSequence, Iterable[TokenSequence]]


@dataclass(frozen=True)
class NGramTable:
    n: int
    counts: Dict[Gram, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts.values())


@dataclass(frozen=True)
class TransitionModel:
    states: Tuple[str, ...]
    transition_counts: Dict[Tuple[str, str], int]
    transition_probs: Dict[Tuple[str, str], float]

    def outgoing(self, state: str) -> int:
        return sum(c for (a, _), c in self.transition_counts.items() if a == state)


class PhaseLabel(str, enum.Enum):
    SETUP = "SETUP"
    EXPLORATION = "EXPLORATION"
    MIXED = "MIXED"

    def __str__(self):
        return self.value


def _texts(seqs: Sequences) -> List[Tuple[str, ...]]:
    if isinstance(seqs, TokenSequence):
        return [seqs.texts]
    return [s.texts if isinstance(s, TokenSequence) else tuple(s) for s in seqs]


def count_ngrams(seqs: Sequences, n: int) -> NGramTable:
    """Sliding-window counts; windows never cross sequence boundaries."""
    if n < 1:
        raise InvalidN(n)
    counts = Counter()
    for texts in _texts(seqs):
        for i in range(len(texts) - n + 1):
            counts[texts[i:i + n]] += 1
    return NGramTable(n, dict(sorted(counts.items())))


def top_ngrams(table: NGramTable, k: int) -> List[Tuple[Gram, int, float]]:
    if k < 1:
        raise InvalidParams(f"k must be >= 1, got {k}")
    total = table.total
    ranked = sorted(table.counts.items(), key=lambda item: (-item[1], item[0]))
    return [(gram, count, count / total) for gram, count in ranked[:k]]


def build_markov(seqs: Sequences) -> TransitionModel:
    states = set()
    counts = Counter()
    for texts in _texts(seqs):
        states.update(texts)
        counts.update(zip(texts, texts[1:]))

    outgoing = defaultdict(int)
    for (a, _), c in counts.items():
        outgoing[a] += c

    ordered = dict(sorted(counts.items()))
    probs = {pair: c / outgoing[pair[0]] for pair, c in ordered.items()}
    return TransitionModel(tuple(sorted(states)), ordered, probs)


def transition_prob(model: TransitionModel, frm: str, to: str) -> float:
    if frm not in model.states:
        raise UnknownState(frm)
    return model.transition_probs.get((frm, to), 0.0)


def predict_next(model: TransitionModel, token: str, k: int = 3) -> List[Tuple[str, float]]:
    """The k most likely successors of `token`, ties broken alphabetically."""
    if token not in model.states:
        raise UnknownState(token)
    successors = [(b, p) for (a, b), p in model.transition_probs.items() if a == token]
    return sorted(successors, key=lambda item: (-item[1], item[0]))[:k]


def _family(text: str) -> str:
    return text.partition("_")[0].upper()


def classify_phase(window: Sequence[str], theta_setup: float = 0.5, theta_explore: float = 0.5) -> PhaseLabel:
    if not window:
        raise EmptyWindow()
    for theta in (theta_setup, theta_explore):
        if not 0 < theta <= 1:
            raise InvalidParams(f"phase threshold must be in (0, 1], got {theta}")
    families = Counter(_family(t) for t in window)
    if families[MoveKind.MODIFY.value] / len(window) >= theta_setup:
        return PhaseLabel.SETUP
    if families[MoveKind.GENERATION.value] / len(window) >= theta_explore:
        return PhaseLabel.EXPLORATION
    return PhaseLabel.MIXED


def phase_timeline(seq: TokenSequence, window: int = 5, theta_setup: float = 0.5,
                   theta_explore: float = 0.5) -> List[Tuple[int, int, PhaseLabel]]:
    """Labels consecutive non-overlapping windows as (start, end, phase)."""
    if window < 1:
        raise InvalidParams(f"window must be >= 1, got {window}")
    texts = seq.texts
    return [
        (i, min(i + window, len(texts)), classify_phase(texts[i:i + window], theta_setup, theta_explore))
        for i in range(0, len(texts), window)
    ]


@dataclass(frozen=True)
class MiningResult:
    tables: Dict[int, NGramTable]
    top: Dict[int, List[Tuple[Gram, int, float]]]
    model: TransitionModel
    top_k: int

    @property
    def bigrams(self) -> NGramTable:
        return self.tables.get(2) or NGramTable(2)


def mine(seq: TokenSequence, orders: Sequence[int] = (2,), top_k: int = 5) -> MiningResult:
    orders = sorted(set(orders) | {2})
    tables = {n: count_ngrams(seq, n) for n in orders}
    model = build_markov(seq)
    log.info("Mined %d tokens: %d distinct bigrams, %d states",
             len(seq), len(tables[2].counts), len(model.states))
    return MiningResult(
        tables=tables,
        top={n: top_ngrams(t, top_k) for n, t in tables.items()},
        model=model,
        top_k=top_k,
    )
