"""Rule-driven de-noising and classification of raw events into design moves."""

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, List, Optional, Pattern, Tuple, Union

from .errors import RuleParseError, UnknownMoveKind
from .event_ingest import event_from_dict, event_to_dict
from .models import ORIGINS, DesignMove, MoveKind, RawEvent, SessionLog
from .util import compile_glob

__all__ = [
    "Keep",
    "Discard",
    "FilterRule",
    "RuleSet",
    "FilterReport",
    "load_rules",
    "default_rules",
    "dump_rules",
    "classify",
    "apply",
    "dump_moves",
    "load_moves",
]

log = logging.getLogger(__name__)

ANY = "-"


@dataclass(frozen=True)
class Keep:
    move: MoveKind

    def __str__(self):
        return f"KEEP({self.move.value})"


@dataclass(frozen=True)
class Discard:
    reason: str

    def __str__(self):
        return f"DISCARD({self.reason})"


Verdict = Union[Keep, Discard]


def _glob(text: str) -> Optional[Pattern]:
    return None if text == ANY else compile_glob(text)


@dataclass(frozen=True)
class FilterRule:
    action_glob: str
    source_glob: str
    verdict: Verdict
    kind_glob: Optional[str] = None
    origin_match: Optional[str] = None
    _patterns: Tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_patterns", (
            _glob(self.action_glob),
            _glob(self.source_glob),
            _glob(self.kind_glob or ANY),
        ))

    def matches(self, event: RawEvent) -> bool:
        action, source, kind = self._patterns
        if action is not None and not action.fullmatch(event.action_type):
            return False
        if source is not None and not source.fullmatch(event.raw_source_label):
            return False
        if kind is not None and not kind.fullmatch(event.node_kind):
            return False
        if self.origin_match is not None and self.origin_match != event.origin:
            return False
        return True


@dataclass(frozen=True)
class RuleSet:
    rules: Tuple[FilterRule, ...]
    default_verdict: Verdict = Discard("unmatched")

    def __len__(self):
        return len(self.rules)


@dataclass(frozen=True)
class FilterReport:
    input_count: int = 0
    kept_count: int = 0
    discarded_count: int = 0
    discarded_by_reason: Dict[str, int] = field(default_factory=dict)
    kept_by_move: Dict[MoveKind, int] = field(default_factory=dict)
    unmatched_ids: Tuple[str, ...] = ()

    @property
    def reduction_fraction(self) -> float:
        if not self.input_count:
            return 0.0
        return self.discarded_count / self.input_count

    def todict(self):
        return {
            "input_count": self.input_count,
            "kept_count": self.kept_count,
            "discarded_count": self.discarded_count,
            "discarded_by_reason": dict(sorted(self.discarded_by_reason.items())),
            "kept_by_move": {m.value: self.kept_by_move.get(m, 0) for m in MoveKind},
            "reduction_fraction": self.reduction_fraction,
            "unmatched_ids": list(self.unmatched_ids),
        }


def _wildcard(text: str) -> Optional[str]:
    return None if text in (ANY, "*") else text


def load_rules(text: str) -> RuleSet:
    """Parses rule-file text.

    One rule per line: ``verdict action_glob source_glob kind_glob origin move_or_reason``.
    """
    rules = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        cols = line.split()
        if len(cols) != 6:
            raise RuleParseError(lineno, f"expected 6 columns, got {len(cols)}")
        verdict_name, action, source, kind, origin, target = cols

        origin = _wildcard(origin.lower())
        if origin is not None and origin not in ORIGINS:
            raise RuleParseError(lineno, f"unknown origin '{origin}'")

        verdict_name = verdict_name.lower()
        if verdict_name == "keep":
            try:
                verdict = Keep(MoveKind(target.upper()))
            except ValueError:
                raise UnknownMoveKind(target, lineno)
        elif verdict_name == "discard":
            verdict = Discard(target)
        else:
            raise RuleParseError(lineno, f"unknown verdict '{verdict_name}'")

        rules.append(FilterRule(
            action_glob=action,
            source_glob=source,
            kind_glob=_wildcard(kind),
            origin_match=origin,
            verdict=verdict,
        ))

    if not rules:
        raise RuleParseError(0, "rule file holds no rules")
    return RuleSet(tuple(rules))


def default_rules_text() -> str:
    return resources.files(__package__).joinpath("default_rules.txt").read_text(encoding="utf-8")


def default_rules() -> RuleSet:
    return load_rules(default_rules_text())


def dump_rules(rules: RuleSet) -> str:
    lines = []
    for rule in rules.rules:
        if isinstance(rule.verdict, Keep):
            verdict, target = "keep", rule.verdict.move.value
        else:
            verdict, target = "discard", rule.verdict.reason
        lines.append(" ".join([
            verdict,
            rule.action_glob,
            rule.source_glob,
            rule.kind_glob or ANY,
            rule.origin_match or ANY,
            target,
        ]))
    return "\n".join(lines) + "\n"


def classify(event: RawEvent, rules: RuleSet) -> Verdict:
    for rule in rules.rules:
        if rule.matches(event):
            return rule.verdict
    return rules.default_verdict


def apply(session: SessionLog, rules: RuleSet, verbose: bool = False) -> Tuple[List[DesignMove], FilterReport]:
    moves = []
    discarded = Counter()
    kept = Counter()
    unmatched = []

    for event in session.events:
        verdict = classify(event, rules)
        log.debug("%s -> %s", event.event_id, verdict)
        if isinstance(verdict, Keep):
            kept[verdict.move] += 1
            moves.append(DesignMove(verdict.move, event, global_seq=len(moves) + 1))
        else:
            discarded[verdict.reason] += 1
            if verdict == rules.default_verdict:
                unmatched.append(event.event_id)

    if unmatched and verbose:
        log.info("Unmatched events: %s", ", ".join(unmatched))

    report = FilterReport(
        input_count=len(session.events),
        kept_count=len(moves),
        discarded_count=sum(discarded.values()),
        discarded_by_reason=dict(sorted(discarded.items())),
        kept_by_move={m: kept[m] for m in MoveKind if kept[m]},
        unmatched_ids=tuple(unmatched) if verbose else (),
    )
    log.info("Kept %d of %d events (%d discarded)", report.kept_count, report.input_count, report.discarded_count)
    return moves, report


def dump_moves(moves: List[DesignMove]) -> str:
    """One JSON object per kept move: its global_seq, move kind and source event."""
    return "".join(
        json.dumps({"global_seq": m.global_seq, "move": m.move.value, "event": event_to_dict(m.event)},
                   sort_keys=True) + "\n"
        for m in moves
    )


def load_moves(text: str) -> List[DesignMove]:
    moves = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        record = json.loads(line)
        moves.append(DesignMove(
            move=MoveKind(record["move"]),
            event=event_from_dict(record["event"], lineno),
            global_seq=record["global_seq"],
        ))
    return moves
