"""
Command line front-end for mimir.

Every stage can be run on its own, or all of them at once with ``run``.
Defaults come from :class:`mimir.config.Config` (and so from the
environment); flags always take precedence.

Examples:

# Whole pipeline on a raw log
$ mimir run session.csv --out out/

# The same, one stage at a time
$ mimir filter session.csv --out out/
$ mimir graph out/moves.jsonl --out out/
$ mimir tokenize out/moves.jsonl --out out/
$ mimir mine out/tokens.txt --out out/
$ mimir digest out/graph.json out/tokens.txt --out out/

# Write the reference fixtures
$ mimir synth --out fixtures/

"""
import dataclasses
import json
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import click
import fs.copy
from fs.memoryfs import MemoryFS

from . import open_fs
from .agent_context import build_digest, detect_repetition, render_digest_text
from .config import Config, DebugConfig
from .errors import EXIT_USAGE, InvalidConfig, MimirError
from .event_ingest import FORMATS, dump_events, normalize, split_sessions
from .graph_export import graph_from_json, layout, mining_to_json, to_dot, to_json
from .lineage_graph import build_graph, graph_stats
from .models import SessionLog, TokenSequence, WorkflowGraph
from .semantic_filter import (RuleSet, apply, default_rules, default_rules_text, dump_moves, dump_rules, load_moves,
                              load_rules)
from .sequence_miner import MiningResult, mine
from .synth_fixtures import ScenarioSpec, generate, reference_fixtures, write_corpus
from .tokenizer import read_tokens, tokenize, write_tokens
from .util import format_percent

log = logging.getLogger(__name__)

ARTIFACTS = (
    "events.csv",
    "report.json",
    "moves.jsonl",
    "graph.dot",
    "graph.json",
    "tokens.txt",
    "mining.json",
    "digest.txt",
    "document.json",
)


@dataclass(frozen=True)
class PipelineConfig:
    fmt: Optional[str] = None
    rules: Optional[str] = None
    out: Optional[str] = None
    strict: bool = True
    verbose: bool = False
    window: int = 20
    top_k: int = 5
    rep_threshold: int = 5
    max_pattern: int = 3
    phase_window: int = 5
    theta_setup: float = 0.5
    theta_explore: float = 0.5
    min_prob: float = 0.5
    min_support: int = 2
    ngram_orders: Tuple[int, ...] = (2,)
    seed: int = 42

    @classmethod
    def from_config(cls, config=Config, **overrides):
        values = dict(
            rules=config.RULES,
            strict=config.STRICT,
            window=config.WINDOW,
            top_k=config.TOP_K,
            rep_threshold=config.REP_THRESHOLD,
            max_pattern=config.MAX_PATTERN,
            phase_window=config.PHASE_WINDOW,
            theta_setup=config.THETA_SETUP,
            theta_explore=config.THETA_EXPLORE,
            min_prob=config.SUGGEST_MIN_PROB,
            min_support=config.SUGGEST_MIN_SUPPORT,
            ngram_orders=tuple(config.NGRAM_ORDERS),
            seed=config.SEED,
        )
        # unset flags fall back to the config value
        values.update({k: v for k, v in overrides.items() if v is not None and v != ()})
        cfg = cls(**values)
        cfg.validate()
        return cfg

    def validate(self):
        if self.fmt is not None and self.fmt not in FORMATS:
            raise InvalidConfig(f"format must be one of {', '.join(FORMATS)}, got {self.fmt}")
        for name in ("window", "top_k", "phase_window"):
            if getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.rep_threshold < 2:
            raise InvalidConfig(f"rep_threshold must be >= 2, got {self.rep_threshold}")
        if not 1 <= self.max_pattern <= 3:
            raise InvalidConfig(f"max_pattern must be between 1 and 3, got {self.max_pattern}")
        for name in ("theta_setup", "theta_explore", "min_prob"):
            if not 0 < getattr(self, name) <= 1:
                raise InvalidConfig(f"{name} must be in (0, 1], got {getattr(self, name)}")
        if self.min_support < 1:
            raise InvalidConfig(f"min_support must be >= 1, got {self.min_support}")
        if not self.ngram_orders or any(n < 1 for n in self.ngram_orders):
            raise InvalidConfig(f"n-gram orders must be >= 1, got {self.ngram_orders}")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidConfig(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def load_rules(self) -> RuleSet:
        if self.rules is None:
            return default_rules()
        try:
            with open(self.rules, encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            raise InvalidConfig(f"cannot read rules file {self.rules}: {e}")
        return load_rules(text)


class MimirGroup(click.Group):
    """Maps pipeline errors and usage errors onto the documented exit codes."""

    def make_context(self, *args, **kwargs):
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as e:
            e.exit_code = EXIT_USAGE
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = EXIT_USAGE
            raise
        except MimirError as e:
            err = click.ClickException(f"{type(e).__name__}: {e}")
            err.exit_code = e.exit_code
            raise err from e


# Artifact rendering


def _report_json(session: SessionLog, report) -> str:
    doc = report.todict()
    doc["session_id"] = session.session_id
    doc["parse"] = dataclasses.asdict(session.report)
    doc["parse"]["errors"] = list(session.report.errors)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _graph_artifacts(graph: WorkflowGraph) -> Dict[str, str]:
    lg = layout(graph)
    return {
        "graph.dot": to_dot(lg),
        "graph.json": to_json(lg, graph_stats(graph)),
    }


def _mine(tokens: TokenSequence, cfg: PipelineConfig) -> MiningResult:
    return mine(tokens, cfg.ngram_orders, cfg.top_k)


def _digest(graph: WorkflowGraph, tokens: TokenSequence, mining: MiningResult, cfg: PipelineConfig):
    triggers = detect_repetition(tokens, cfg.max_pattern, cfg.rep_threshold)
    return build_digest(
        graph, tokens, mining.bigrams, mining.model, triggers,
        window=cfg.window,
        k=cfg.top_k,
        phase_window=cfg.phase_window,
        theta_setup=cfg.theta_setup,
        theta_explore=cfg.theta_explore,
        min_prob=cfg.min_prob,
        min_support=cfg.min_support,
    )


def _document(graph: WorkflowGraph, tokens: TokenSequence, cfg: PipelineConfig) -> Tuple[Dict[str, str], object]:
    mining = _mine(tokens, cfg)
    digest = _digest(graph, tokens, mining, cfg)
    artifacts = {
        "mining.json": mining_to_json(mining),
        "digest.txt": render_digest_text(digest),
        "document.json": to_json(layout(graph), graph_stats(graph), mining, digest),
    }
    return artifacts, digest


def run_session(session: SessionLog, rules: RuleSet, cfg: PipelineConfig) -> Tuple[Dict[str, str], str]:
    """Runs every stage on one session; returns its artifacts and a summary."""
    session = normalize(session)
    moves, report = apply(session, rules, verbose=cfg.verbose)
    graph = build_graph(moves, strict=cfg.strict, session_id=session.session_id)
    tokens = tokenize(moves, session_id=session.session_id)

    artifacts = {
        "events.csv": dump_events(session, "csv"),
        "report.json": _report_json(session, report),
        "moves.jsonl": dump_moves(moves),
        "tokens.txt": write_tokens(tokens),
    }
    artifacts.update(_graph_artifacts(graph))
    document, digest = _document(graph, tokens, cfg)
    artifacts.update(document)

    lines = [f"kept {report.kept_count} / {report.input_count} ({format_percent(report.reduction_fraction)} discarded)"]
    if digest.top_bigrams:
        gram, count, share = digest.top_bigrams[0]
        lines.append(f"top bigram: {' -> '.join(gram)} ({count}, {format_percent(share)})")
    else:
        lines.append("top bigram: none")
    lines.append(f"phase: {digest.current_phase.value}")
    return artifacts, "\n".join(lines)


def run_pipeline(cfg: PipelineConfig, stream, echo: Tuple[str, ...] = ()) -> List[Tuple[str, str]]:
    """
    Runs every stage on each session in `stream` and publishes the artifacts
    to `cfg.out`. Returns (session_id, summary) pairs.

    Nothing is written unless every session succeeds.
    """
    rules = cfg.load_rules()
    sessions = _read_sessions(stream, cfg)
    results = [run_session(session, rules, cfg) for session in sessions]
    _publish(cfg.out, _per_session(sessions, [a for a, _ in results]), echo)
    return [(session.session_id, summary) for session, (_, summary) in zip(sessions, results)]


# Plumbing


def _detect_format(fmt: Optional[str], stream) -> str:
    if fmt is not None:
        return fmt
    name = getattr(stream, "name", "") or ""
    return "jsonl" if str(name).endswith((".jsonl", ".json")) else "csv"


def _session_dir(session: SessionLog) -> str:
    return session.session_id.replace("/", "_").strip(".") or "_"


def _publish(out: str, staged: List[Tuple[str, Dict[str, str]]], echo: Tuple[str, ...]):
    """Stages every artifact in memory, then copies them to `out` in one go."""
    with MemoryFS() as mem:
        for subdir, artifacts in staged:
            if subdir:
                mem.makedirs(subdir, recreate=True)
            for name, text in artifacts.items():
                mem.writetext(f"{subdir}/{name}" if subdir else name, text)

        with open_fs(out) as out_fs:
            fs.copy.copy_fs(mem, out_fs)
    log.info("Wrote %d artifacts to %s", sum(len(a) for _, a in staged), out)

    for subdir, artifacts in staged:
        for name in echo:
            if name in artifacts:
                click.echo(artifacts[name], nl=False)


def _per_session(sessions: List[SessionLog], artifacts: List[Dict[str, str]]) -> List[Tuple[str, Dict[str, str]]]:
    if len(sessions) == 1:
        return [("", artifacts[0])]
    return [(_session_dir(s), a) for s, a in zip(sessions, artifacts)]


def _read_sessions(stream, cfg: PipelineConfig) -> List[SessionLog]:
    return split_sessions(stream, _detect_format(cfg.fmt, stream), strict=cfg.strict)


def _read_graph(stream) -> WorkflowGraph:
    return graph_from_json(stream.read()).graph


# Shared options


def _options(*names):
    available = {
        "fmt": click.option("--format", "fmt", type=click.Choice(FORMATS), help="Input format (default: by extension)"),
        "rules": click.option("--rules", type=click.Path(exists=True, dir_okay=False), help="Rule file"),
        "out": click.option("--out", required=True, type=click.Path(file_okay=False), help="Output directory"),
        "strict": click.option("--strict/--lenient", default=None, help="Fail on malformed input"),
        "verbose": click.option("--unmatched", "verbose", is_flag=True, default=None,
                                help="List events no rule matched in report.json"),
        "window": click.option("--window", type=int, help="Tokens kept in the digest"),
        "top_k": click.option("--top-k", type=int, help="Top bigrams and suggestions"),
        "rep_threshold": click.option("--rep-threshold", type=int, help="Repetitions that raise a trigger"),
        "max_pattern": click.option("--max-pattern", type=int, help="Longest repeated pattern searched for"),
        "phase_window": click.option("--phase-window", type=int, help="Tokens per phase window"),
        "theta_setup": click.option("--theta-setup", type=float, help="MODIFY share of a setup phase"),
        "theta_explore": click.option("--theta-explore", type=float, help="GENERATION share of an exploration phase"),
        "ngram_orders": click.option("--ngram", "ngram_orders", type=int, multiple=True, help="N-gram order to mine"),
        "seed": click.option("--seed", type=int, help="Seed for synthetic corpora"),
        "echo": click.option("--stdout", "echo", type=click.Choice(ARTIFACTS), multiple=True,
                             help="Also print this artifact"),
    }

    def decorator(f):
        for name in reversed(names):
            f = available[name](f)
        return f

    return decorator


DIGEST_OPTIONS = ("window", "top_k", "rep_threshold", "max_pattern", "phase_window", "theta_setup",
                  "theta_explore", "ngram_orders")


def log_level(config, v: int) -> int:
    return max(logging.DEBUG, config.LOG_LEVEL - v * 10)


def _pipeline_config(**flags) -> PipelineConfig:
    ctx = click.get_current_context()
    return PipelineConfig.from_config(config=ctx.find_root().obj or Config, **flags)


@click.group(cls=MimirGroup)
@click.option("-v", count=True)
@click.option("--debug", is_flag=True, help="Use DebugConfig: lenient parsing and debug logging")
@click.version_option(package_name="mimir")
@click.pass_context
def cli(ctx, v, debug):
    """Reconstructs creative workflows from node-based generative tool logs."""
    ctx.obj = DebugConfig if debug else Config
    logging.basicConfig(level=log_level(ctx.obj, v))


@cli.command("ingest")
@click.argument("input", type=click.File("rb"))
@_options("fmt", "strict", "out", "echo")
def ingest(input, echo, **flags):
    """Parses and normalizes a raw log into canonical CSV"""
    cfg = _pipeline_config(**flags)
    sessions = [normalize(s) for s in _read_sessions(input, cfg)]
    artifacts = [{"events.csv": dump_events(s, "csv")} for s in sessions]
    _publish(cfg.out, _per_session(sessions, artifacts), echo)


@cli.command("filter")
@click.argument("input", type=click.File("rb"))
@_options("fmt", "rules", "strict", "verbose", "out", "echo")
def filter_(input, echo, **flags):
    """Drops system noise and classifies the rest into design moves"""
    cfg = _pipeline_config(**flags)
    rules = cfg.load_rules()
    sessions = [normalize(s) for s in _read_sessions(input, cfg)]
    artifacts = []
    for session in sessions:
        moves, report = apply(session, rules, verbose=cfg.verbose)
        artifacts.append({"report.json": _report_json(session, report), "moves.jsonl": dump_moves(moves)})
        click.echo(f"{session.session_id or '-'}: kept {report.kept_count} / {report.input_count} "
                   f"({format_percent(report.reduction_fraction)} discarded)", err=True)
    _publish(cfg.out, _per_session(sessions, artifacts), echo)


@cli.command("graph")
@click.argument("moves", type=click.File("r", encoding="utf-8"))
@click.option("--session", "session_id", help="Session id when moves.jsonl is empty")
@_options("strict", "out", "echo")
def graph_(moves, session_id, echo, **flags):
    """Builds the lineage graph from moves.jsonl"""
    cfg = _pipeline_config(**flags)
    graph = build_graph(load_moves(moves.read()), strict=cfg.strict, session_id=session_id)
    _publish(cfg.out, [("", _graph_artifacts(graph))], echo)


@cli.command("tokenize")
@click.argument("moves", type=click.File("r", encoding="utf-8"))
@click.option("--session", "session_id", help="Session id when moves.jsonl is empty")
@_options("out", "echo")
def tokenize_(moves, session_id, echo, **flags):
    """Turns moves.jsonl into behavioral tokens"""
    cfg = _pipeline_config(**flags)
    tokens = tokenize(load_moves(moves.read()), session_id=session_id)
    _publish(cfg.out, [("", {"tokens.txt": write_tokens(tokens)})], echo)


@cli.command("mine")
@click.argument("tokens", type=click.File("r", encoding="utf-8"))
@_options("top_k", "ngram_orders", "out", "echo")
def mine_(tokens, echo, **flags):
    """Counts n-grams and transitions over tokens.txt"""
    cfg = _pipeline_config(**flags)
    mining = _mine(read_tokens(tokens.read()), cfg)
    _publish(cfg.out, [("", {"mining.json": mining_to_json(mining)})], echo)


@cli.command("digest")
@click.argument("graph", type=click.File("r", encoding="utf-8"))
@click.argument("tokens", type=click.File("r", encoding="utf-8"))
@_options(*DIGEST_OPTIONS, "out", "echo")
def digest_(graph, tokens, echo, **flags):
    """Renders the context digest from graph.json and tokens.txt"""
    cfg = _pipeline_config(**flags)
    workflow = _read_graph(graph)
    seq = read_tokens(tokens.read(), workflow.session_id)
    digest = _digest(workflow, seq, _mine(seq, cfg), cfg)
    _publish(cfg.out, [("", {"digest.txt": render_digest_text(digest)})], echo)


@cli.command("export")
@click.argument("graph", type=click.File("r", encoding="utf-8"))
@click.argument("tokens", type=click.File("r", encoding="utf-8"))
@_options(*DIGEST_OPTIONS, "out", "echo")
def export(graph, tokens, echo, **flags):
    """Writes the structured document: graph, stats, mining and digest"""
    cfg = _pipeline_config(**flags)
    workflow = _read_graph(graph)
    seq = read_tokens(tokens.read(), workflow.session_id)
    artifacts, _ = _document(workflow, seq, cfg)
    _publish(cfg.out, [("", {"document.json": artifacts["document.json"]})], echo)


@cli.command("run")
@click.argument("input", type=click.File("rb"))
@_options("fmt", "rules", "strict", "verbose", *DIGEST_OPTIONS, "out", "echo")
def run(input, echo, **flags):
    """Runs the whole pipeline and writes every artifact"""
    cfg = _pipeline_config(**flags)
    summaries = run_pipeline(cfg, input, echo)
    for session_id, summary in summaries:
        if len(summaries) > 1:
            click.echo(f"[{session_id}]")
        click.echo(summary)


@cli.command("synth")
@click.option("--fixture", "fixtures", multiple=True,
              type=click.Choice(["pilot_927", "pilot_bigrams", "pilot_transitions", "figure1_like"]),
              help="Reference fixture to write (default: all of them)")
@click.option("--random", "count", type=int, default=0, help="Also write this many random sessions")
@click.option("--noise-ratio", type=float, default=0.3, show_default=True)
@click.option("--max-events", type=int, default=200, show_default=True)
@_options("fmt", "seed", "out")
def synth(fixtures, count, noise_ratio, max_events, **flags):
    """Writes synthetic logs together with their ground truth"""
    cfg = _pipeline_config(**flags)
    fmt = cfg.fmt or "csv"
    if count < 0:
        raise InvalidConfig(f"--random must be >= 0, got {count}")
    if count and cfg.seed + count - 1 >= 2 ** 64:
        raise InvalidConfig(f"seeds {cfg.seed}..{cfg.seed + count - 1} do not fit in 64 bits")

    corpora = []
    if fixtures or not count:
        reference = reference_fixtures()
        corpora += [(name, *reference[name]) for name in (fixtures or reference)]
    for i in range(count):
        spec = ScenarioSpec(seed=cfg.seed + i, noise_ratio=noise_ratio, max_events=max_events)
        session, truth = generate(spec)
        corpora.append((session.session_id, session, truth))

    with MemoryFS() as mem:
        for name, session, truth in corpora:
            write_corpus(mem, name, session, truth, fmt)
        with open_fs(cfg.out) as out_fs:
            fs.copy.copy_fs(mem, out_fs)
    click.echo(f"wrote {len(corpora)} corpora to {cfg.out}")


@cli.group("rules", cls=MimirGroup)
def rules_():
    """Inspect filter rules"""


@rules_.command("dump")
@_options("rules")
def rules_dump(rules):
    """Prints the embedded rules, or a rule file in normalized form"""
    if rules is None:
        click.echo(default_rules_text(), nl=False)
        return
    cfg = _pipeline_config(rules=rules)
    click.echo(dump_rules(cfg.load_rules()), nl=False)


def main():
    cli(auto_envvar_prefix="MIMIR")


if __name__ == '__main__':
    main()
