"""Behavioral tokens: ``<MOVE>_<asset kind>`` strings abstracting design moves."""

from collections import Counter
from typing import Iterable, List, Tuple

from .models import DEFAULT_KIND, BehavioralToken, DesignMove, MoveKind, TokenSequence

__all__ = [
    "make_token",
    "parse_token",
    "tokenize",
    "vocabulary",
    "write_tokens",
    "read_tokens",
]


def make_token(move: MoveKind, asset_kind: str) -> BehavioralToken:
    return BehavioralToken(MoveKind(move), (asset_kind or DEFAULT_KIND).strip().lower() or DEFAULT_KIND)


def parse_token(text: str) -> BehavioralToken:
    """Parses ``MOVE_kind``; the move name ends at the first underscore."""
    move, sep, kind = text.strip().partition("_")
    if not sep or not kind:
        raise ValueError(f"not a behavioral token: {text!r}")
    return make_token(MoveKind(move.upper()), kind)


def tokenize(moves: Iterable[DesignMove], session_id: str = None) -> TokenSequence:
    moves = list(moves)
    if session_id is None:
        session_id = moves[0].event.session_id if moves else ""
    return TokenSequence(session_id, tuple(make_token(m.move, m.event.node_kind) for m in moves))


def vocabulary(seq: TokenSequence) -> List[Tuple[str, int]]:
    return sorted(Counter(seq.texts).items())


def write_tokens(seq: TokenSequence) -> str:
    return "".join(f"{text}\n" for text in seq.texts)


def read_tokens(text: str, session_id: str = "") -> TokenSequence:
    return TokenSequence(session_id, tuple(parse_token(line) for line in text.splitlines() if line.strip()))
