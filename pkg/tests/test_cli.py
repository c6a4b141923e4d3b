import json
import logging

import pytest
from click.testing import CliRunner

from mimir.cli import PipelineConfig, cli, log_level, run_pipeline
from mimir.config import Config, DebugConfig
from mimir.errors import InvalidConfig
from mimir.event_ingest import dump_events
from mimir.semantic_filter import default_rules_text

HEADER = "event_id,timestamp,session_id,action_type,raw_source_label,node_id,node_kind,connected_from,origin,payload\n"

ARTIFACTS = ["digest.txt", "document.json", "events.csv", "graph.dot", "graph.json", "mining.json", "moves.jsonl",
             "report.json", "tokens.txt"]


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def figure1_csv(tmp_path, figure1):
    session, _ = figure1
    path = tmp_path / "figure1_like.csv"
    path.write_text(dump_events(session), encoding="utf-8")
    return path


def invoke(runner, *args):
    return runner.invoke(cli, [str(a) for a in args])


def test_run_writes_golden_artifacts(runner, tmp_path, figure1_csv, golden):
    out = tmp_path / "out"
    result = invoke(runner, "run", figure1_csv, "--out", out)
    assert result.exit_code == 0, result.output
    assert "kept 17 / 21 (19.0% discarded)" in result.output
    assert "phase: EXPLORATION" in result.output
    assert sorted(p.name for p in out.iterdir()) == ARTIFACTS
    assert (out / "graph.dot").read_text() == golden("figure1_like.dot")
    assert (out / "digest.txt").read_text() == golden("figure1_like.digest.txt")
    assert (out / "document.json").read_text() == golden("figure1_like.json")


def test_stages_match_run(runner, tmp_path, figure1_csv):
    whole, staged = tmp_path / "whole", tmp_path / "staged"
    assert invoke(runner, "run", figure1_csv, "--out", whole).exit_code == 0

    steps = [
        ("ingest", figure1_csv),
        ("filter", figure1_csv),
        ("graph", staged / "moves.jsonl"),
        ("tokenize", staged / "moves.jsonl"),
        ("mine", staged / "tokens.txt"),
        ("digest", staged / "graph.json", staged / "tokens.txt"),
        ("export", staged / "graph.json", staged / "tokens.txt"),
    ]
    for command, *inputs in steps:
        result = invoke(runner, command, *inputs, "--out", staged)
        assert result.exit_code == 0, (command, result.output)

    for name in ARTIFACTS:
        assert (staged / name).read_bytes() == (whole / name).read_bytes(), name


def test_pilot_summary(runner, tmp_path, pilot):
    session, _ = pilot
    path = tmp_path / "pilot_927.csv"
    path.write_text(dump_events(session))
    result = invoke(runner, "run", path, "--out", tmp_path / "out")
    assert result.exit_code == 0, result.output
    assert "kept 563 / 927 (39.3% discarded)" in result.output
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["kept_count"] == 563


def test_empty_log(runner, tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text(HEADER)
    result = invoke(runner, "run", path, "--out", tmp_path / "out")
    assert result.exit_code == 0, result.output
    assert "kept 0 / 0 (0.0% discarded)" in result.output
    assert (tmp_path / "out" / "digest.txt").read_text() == "workflow digest: \nno activity\n"
    assert (tmp_path / "out" / "tokens.txt").read_text() == ""


def test_cycle_exits_3_without_outputs(runner, tmp_path):
    path = tmp_path / "cycle.csv"
    path.write_text(HEADER
                    + "e1,2024-01-01T00:00:00Z,s,generation_executed,model,a,image,b,generated,\n"
                    + "e2,2024-01-01T00:00:01Z,s,generation_executed,model,b,image,a,generated,\n")
    out = tmp_path / "out"
    result = invoke(runner, "run", path, "--out", out)
    assert result.exit_code == 3
    assert "CycleDetected" in result.output
    assert " -> " in result.output
    assert not out.exists()


def test_malformed_row_exits_2(runner, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(HEADER + "e1,yesterday,s,node_created,,a,image,,,\n")
    result = invoke(runner, "run", path, "--out", tmp_path / "out")
    assert result.exit_code == 2
    assert "MalformedRecord" in result.output


def test_lenient_skips_malformed_row(runner, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(HEADER + "e1,yesterday,s,node_created,,a,image,,,\n"
                    + "e2,2024-01-01T00:00:00Z,s,node_created,canvas,a,image,,,\n")
    result = invoke(runner, "run", path, "--lenient", "--out", tmp_path / "out")
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["parse"]["skipped"] == 1
    assert report["kept_count"] == 1


def test_bad_rules_exit_4(runner, tmp_path, figure1_csv):
    rules = tmp_path / "rules.txt"
    rules.write_text("keep * * - - TELEPORT\n")
    result = invoke(runner, "filter", figure1_csv, "--rules", rules, "--out", tmp_path / "out")
    assert result.exit_code == 4
    assert "UnknownMoveKind" in result.output


@pytest.mark.parametrize("args", [
    ["run"],
    ["run", "missing.csv", "--out", "x"],
    ["frobnicate"],
    ["run", "{input}", "--out", "{out}", "--window", "0"],
    ["run", "{input}", "--out", "{out}", "--format", "xml"],
])
def test_usage_errors_exit_1(runner, tmp_path, figure1_csv, args):
    args = [a.format(input=figure1_csv, out=tmp_path / "out") for a in args]
    result = invoke(runner, *args)
    assert result.exit_code == 1, result.output


def test_pipeline_config_validation():
    assert PipelineConfig.from_config(window=3).window == 3
    with pytest.raises(InvalidConfig):
        PipelineConfig.from_config(theta_setup=1.5)
    with pytest.raises(InvalidConfig):
        PipelineConfig.from_config(max_pattern=4)


def test_multi_session_subdirectories(runner, tmp_path):
    path = tmp_path / "two.csv"
    path.write_text(HEADER
                    + "e1,2024-01-01T00:00:00Z,alpha,node_created,canvas,a,prompt,,,\n"
                    + "e2,2024-01-01T00:00:00Z,beta,node_created,canvas,a,image,,,\n")
    out = tmp_path / "out"
    result = invoke(runner, "run", path, "--out", out)
    assert result.exit_code == 0, result.output
    assert "[alpha]" in result.output and "[beta]" in result.output
    assert (out / "alpha" / "tokens.txt").read_text() == "INSERT_prompt\n"
    assert (out / "beta" / "tokens.txt").read_text() == "INSERT_image\n"


def test_stdout_echoes_artifacts(runner, tmp_path, figure1_csv, golden):
    result = invoke(runner, "run", figure1_csv, "--out", tmp_path / "out", "--stdout", "digest.txt")
    assert result.exit_code == 0
    assert golden("figure1_like.digest.txt") in result.output


def test_rules_dump(runner):
    result = invoke(runner, "rules", "dump")
    assert result.exit_code == 0
    assert result.output == default_rules_text()


def test_synth_then_run(runner, tmp_path):
    fixtures = tmp_path / "fixtures"
    result = invoke(runner, "synth", "--fixture", "figure1_like", "--random", "2", "--seed", "5", "--out", fixtures)
    assert result.exit_code == 0, result.output
    names = sorted(p.name for p in fixtures.iterdir())
    assert names == ["figure1_like.csv", "figure1_like.truth.json", "synth-5.csv", "synth-5.truth.json",
                     "synth-6.csv", "synth-6.truth.json"]

    result = invoke(runner, "run", fixtures / "synth-5.csv", "--out", tmp_path / "out")
    assert result.exit_code == 0, result.output
    truth = json.loads((fixtures / "synth-5.truth.json").read_text())
    assert (tmp_path / "out" / "tokens.txt").read_text().split() == truth["tokens"]


def test_run_pipeline_returns_summaries(tmp_path, figure1_csv):
    cfg = PipelineConfig.from_config(out=str(tmp_path / "out"))
    with open(figure1_csv, "rb") as stream:
        summaries = run_pipeline(cfg, stream)
    assert [sid for sid, _ in summaries] == ["figure1_like"]
    assert summaries[0][1].startswith("kept 17 / 21 (19.0% discarded)")
    assert (tmp_path / "out" / "digest.txt").exists()


def test_noise_only_session_keeps_its_id(runner, tmp_path):
    path = tmp_path / "noise.csv"
    path.write_text(HEADER + "e1,2024-01-01T00:00:00Z,s1,temp_cache_purge,system,,,,system,\n")
    out = tmp_path / "out"
    result = invoke(runner, "run", path, "--out", out)
    assert result.exit_code == 0, result.output
    assert "kept 0 / 1 (100.0% discarded)" in result.output
    assert json.loads((out / "graph.json").read_text())["meta"]["session_id"] == "s1"
    assert (out / "graph.dot").read_text().startswith('digraph "s1" {')
    assert (out / "digest.txt").read_text() == "workflow digest: s1\nno activity\n"

    staged = tmp_path / "staged"
    assert invoke(runner, "filter", path, "--out", staged).exit_code == 0
    for command in ("graph", "tokenize"):
        result = invoke(runner, command, staged / "moves.jsonl", "--session", "s1", "--out", staged)
        assert result.exit_code == 0, result.output
    for name in ("graph.json", "graph.dot", "tokens.txt"):
        assert (staged / name).read_bytes() == (out / name).read_bytes(), name


def test_out_of_range_timestamp_exits_2(runner, tmp_path):
    path = tmp_path / "edge.csv"
    path.write_text(HEADER + "e1,9999-12-31T23:59:59-01:00,s,node_created,canvas,a,image,,,\n")
    result = invoke(runner, "run", path, "--out", tmp_path / "out")
    assert result.exit_code == 2
    assert "MalformedRecord" in result.output


def test_log_level_starts_from_config():
    assert log_level(Config, 0) == logging.WARNING
    assert log_level(Config, 1) == logging.INFO
    assert log_level(DebugConfig, 0) == logging.DEBUG
    assert log_level(Config, 5) == logging.DEBUG


def test_debug_config_parses_leniently(runner, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(HEADER + "e1,yesterday,s,node_created,,a,image,,,\n"
                    + "e2,2024-01-01T00:00:00Z,s,node_created,canvas,a,image,,,\n")
    assert invoke(runner, "run", path, "--out", tmp_path / "strict").exit_code == 2

    result = invoke(runner, "--debug", "run", path, "--out", tmp_path / "debug")
    assert result.exit_code == 0, result.output
    assert "kept 1 / " in result.output

    result = invoke(runner, "--debug", "run", path, "--strict", "--out", tmp_path / "forced")
    assert result.exit_code == 2


@pytest.mark.parametrize("seed, count, code", [
    (2 ** 64 - 2, 2, 0),
    (2 ** 64 - 2, 3, 1),
    (0, -1, 1),
])
def test_synth_random_seed_range(runner, tmp_path, seed, count, code):
    out = tmp_path / "fixtures"
    result = invoke(runner, "synth", "--random", count, "--seed", seed, "--max-events", 20, "--out", out)
    assert result.exit_code == code, result.output
    if code:
        assert "InvalidConfig" in result.output
        assert not out.exists()
