"""Compact workflow-history digests for an assistant's context window.

A digest bundles the graph summary, the most recent tokens, dominant
bigrams, the current phase, detected repetitions, and template suggestions
that cite the pattern or transition they come from.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

from .errors import InvalidParams, SessionMismatch
from .models import GraphStats, TokenSequence, WorkflowGraph
from .lineage_graph import graph_stats
from .sequence_miner import NGramTable, PhaseLabel, TransitionModel, classify_phase, top_ngrams
from .util import format_percent

__all__ = [
    "PatternTrigger",
    "ContextDigest",
    "detect_repetition",
    "dominant_transitions",
    "build_digest",
    "render_digest_text",
    "digest_size_bound",
    "DIGEST_MAX_CHARS",
]

log = logging.getLogger(__name__)

TRIGGER_TEMPLATE = "Detected {pattern} repeated {n} times; offer to automate this step."
TRANSITION_TEMPLATE = "After {frm}, users proceed to {to} with probability {p}; consider pre-staging {to}."
DIGEST_MAX_CHARS = 2000


@dataclass(frozen=True)
class PatternTrigger:
    pattern: Tuple[str, ...]
    repetitions: int
    span: Tuple[int, int]
    threshold: int

    def todict(self):
        return {
            "pattern": list(self.pattern),
            "repetitions": self.repetitions,
            "span": list(self.span),
            "threshold": self.threshold,
        }


@dataclass(frozen=True)
class ContextDigest:
    session_id: str
    token_tail: Tuple[str, ...]
    graph_summary: GraphStats
    top_bigrams: Tuple[Tuple[Tuple[str, ...], int, float], ...]
    current_phase: PhaseLabel
    triggers: Tuple[PatternTrigger, ...]
    suggestions: Tuple[str, ...]
    window: int = 20
    top_k: int = 5

    @property
    def empty(self) -> bool:
        return not self.token_tail and not self.graph_summary.node_count

    def todict(self):
        return {
            "session_id": self.session_id,
            "token_tail": list(self.token_tail),
            "graph_summary": self.graph_summary.todict(),
            "top_bigrams": [
                {"tokens": list(g), "count": c, "share": s, "display": format_percent(s)}
                for g, c, s in self.top_bigrams
            ],
            "current_phase": self.current_phase.value,
            "triggers": [t.todict() for t in self.triggers],
            "suggestions": list(self.suggestions),
        }


def _texts(seq: Union[TokenSequence, Sequence[str]]) -> Tuple[str, ...]:
    return seq.texts if isinstance(seq, TokenSequence) else tuple(seq)


def _is_primitive(pattern: Tuple[str, ...]) -> bool:
    p = len(pattern)
    return not any(p % q == 0 and pattern == pattern[:q] * (p // q) for q in range(1, p))


def _periodic_runs(texts: Tuple[str, ...], p: int):
    """Yields maximal (start, end) stretches where texts[i] == texts[i + p] throughout."""
    n = len(texts)
    i = 0
    while i < n - p:
        if texts[i] != texts[i + p]:
            i += 1
            continue
        j = i
        while j < n - p and texts[j] == texts[j + p]:
            j += 1
        yield i, j + p
        i = j


def detect_repetition(seq, max_pattern_len: int = 3, threshold: int = 5) -> List[PatternTrigger]:
    """Finds maximal runs of a pattern repeated back to back at least `threshold` times.

    Every run is reported once, from its earliest start, with its shortest
    repeating unit: ``B B B B B B`` is ``B`` x6, never ``B B`` x3, and
    ``X Y X Y ...`` is never reported again as ``Y X``.
    """
    if max_pattern_len < 1:
        raise InvalidParams(f"max_pattern_len must be >= 1, got {max_pattern_len}")
    if threshold < 2:
        raise InvalidParams(f"threshold must be >= 2, got {threshold}")

    texts = _texts(seq)
    triggers = []
    for p in range(1, max_pattern_len + 1):
        for start, end in _periodic_runs(texts, p):
            pattern = texts[start:start + p]
            # a non-primitive unit is the same run as its shorter period
            if not _is_primitive(pattern):
                continue
            reps = (end - start) // p
            if reps >= threshold:
                triggers.append(PatternTrigger(pattern, reps, (start, start + reps * p), threshold))
    return sorted(triggers, key=lambda t: (t.span[0], len(t.pattern), t.pattern))


def dominant_transitions(model: TransitionModel, min_prob: float = 0.5, min_support: int = 2,
                         k: int = 5) -> List[Tuple[str, str, float]]:
    """Each state's most likely successor, when it is likely and well supported enough."""
    best = {}
    support = defaultdict(int)
    for (a, b), count in model.transition_counts.items():
        support[a] += count
        p = model.transition_probs[(a, b)]
        if a not in best or (-p, b) < (-best[a][1], best[a][0]):
            best[a] = (b, p)

    chosen = [
        (a, b, p) for a, (b, p) in best.items()
        if p >= min_prob and support[a] >= min_support
    ]
    return sorted(chosen, key=lambda item: (-item[2], item[0]))[:k]


def build_digest(graph: WorkflowGraph, tokens: TokenSequence, ngrams: NGramTable, model: TransitionModel,
                 triggers: Sequence[PatternTrigger], window: int = 20, k: int = 5, phase_window: int = 5,
                 theta_setup: float = 0.5, theta_explore: float = 0.5, min_prob: float = 0.5,
                 min_support: int = 2) -> ContextDigest:
    if graph.session_id != tokens.session_id:
        raise SessionMismatch(graph.session_id, tokens.session_id)
    if window < 1 or k < 1 or phase_window < 1:
        raise InvalidParams("window, k and phase window must be >= 1")
    if ngrams.n != 2:
        raise InvalidParams(f"digest needs the bigram table, got n={ngrams.n}")

    texts = tokens.texts
    recent = texts[-phase_window:]
    phase = classify_phase(recent, theta_setup, theta_explore) if recent else PhaseLabel.MIXED

    suggestions = [
        TRIGGER_TEMPLATE.format(pattern=" -> ".join(t.pattern), n=t.repetitions)
        for t in triggers
    ]
    suggestions += [
        TRANSITION_TEMPLATE.format(frm=a, to=b, p=format_percent(p))
        for a, b, p in dominant_transitions(model, min_prob, min_support, k)
    ]

    digest = ContextDigest(
        session_id=tokens.session_id,
        token_tail=texts[-window:],
        graph_summary=graph_stats(graph),
        top_bigrams=tuple(top_ngrams(ngrams, k)),
        current_phase=phase,
        triggers=tuple(triggers),
        suggestions=tuple(suggestions),
        window=window,
        top_k=k,
    )
    log.info("Digest for %s: phase %s, %d triggers, %d suggestions",
             digest.session_id, phase.value, len(digest.triggers), len(digest.suggestions))
    return digest


def _render(d: ContextDigest, tail, bigrams, trigger_lines, suggestions) -> str:
    s = d.graph_summary
    lines = [
        f"workflow digest: {d.session_id}",
        "[summary]",
        f"nodes {s.node_count}, edges {s.edge_count}, max depth {s.max_depth}, "
        f"branches {s.branch_count}, leaves {s.leaf_count}, widest depth {s.widest_depth}",
        f"recent ({len(tail)}): " + " ".join(tail),
        "[phase]",
        d.current_phase.value,
        "[top bigrams]",
    ]
    lines += [f"{rank}. {' -> '.join(gram)}: {count} ({format_percent(share)})"
              for rank, (gram, count, share) in enumerate(bigrams, start=1)] or ["none"]
    lines.append("[triggers]")
    lines += trigger_lines or ["none"]
    lines.append("[suggestions]")
    lines += [f"- {suggestion}" for suggestion in suggestions] or ["none"]
    return "\n".join(lines) + "\n"


def render_digest_text(d: ContextDigest, max_chars: int = DIGEST_MAX_CHARS) -> str:
    """Renders the digest as plain text of at most `max_chars` characters.

    Over budget, suggestions are dropped from the end first, then trigger
    lines, then the oldest tokens of the tail, then the lowest bigrams.
    """
    if d.empty:
        return f"workflow digest: {d.session_id}\nno activity\n"[:max_chars]

    tail = list(d.token_tail)
    bigrams = list(d.top_bigrams)
    trigger_lines = [f"- {' -> '.join(t.pattern)} x{t.repetitions} at {t.span[0]}:{t.span[1]}"
                     for t in d.triggers[:d.top_k]]
    n_triggers = len(d.triggers)
    suggestions = list(d.suggestions[:min(n_triggers, d.top_k)]) + list(d.suggestions[n_triggers:])

    text = _render(d, tail, bigrams, trigger_lines, suggestions)
    dropped = 0
    while len(text) > max_chars:
        part = next((p for p in (suggestions, trigger_lines, tail, bigrams) if p), None)
        if part is None:
            return text[:max_chars]
        part.pop(0 if part is tail else -1)
        dropped += 1
        text = _render(d, tail, bigrams, trigger_lines, suggestions)
    if dropped:
        log.debug("Dropped %d digest lines or tokens for %s to fit %d characters", dropped, d.session_id, max_chars)
    return text


def digest_size_bound(window: int = 20, k: int = 5, max_token_len: int = 24, session_len: int = 32,
                      max_chars: int = DIGEST_MAX_CHARS) -> int:
    """Upper bound on len(render_digest_text(d, max_chars)) for tokens up to `max_token_len` characters.

    Untrimmed, the text shows at most `window` tokens, `k` bigrams, `k`
    triggers and `2k` suggestions; counts are assumed below 10**6.
    """
    t = max_token_len
    header = 18 + session_len
    summary = 10 + 110 + 16 + window * (t + 1)
    phase = 8 + 12
    bigrams = 15 + k * (4 + 2 * t + 4 + 2 + 8 + 10)
    triggers = 16 + k * (3 * t + 40)
    suggestions = 14 + k * (70 + 3 * t + 8) + k * (70 + 3 * t + 8)
    return min(max_chars, header + summary + phase + bigrams + triggers + suggestions)
