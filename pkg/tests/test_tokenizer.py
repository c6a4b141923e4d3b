import pytest

from mimir.models import MoveKind
from mimir.tokenizer import make_token, parse_token, read_tokens, tokenize, vocabulary, write_tokens


def test_token_text():
    assert make_token(MoveKind.GENERATION, "image").text == "GENERATION_image"
    assert make_token(MoveKind.INSERT, "").text == "INSERT_other"
    assert make_token(MoveKind.MODIFY, "Video").text == "MODIFY_video"


def test_parse_token_splits_on_first_underscore():
    token = parse_token("MODIFY_metadata_update")
    assert token.move is MoveKind.MODIFY
    assert token.asset_kind == "metadata_update"


@pytest.mark.parametrize("text", ["GENERATION", "GENERATION_", "BOGUS_image"])
def test_parse_token_rejects(text):
    with pytest.raises(ValueError):
        parse_token(text)


def test_figure1_tokens(figure1):
    _, truth = figure1
    seq = tokenize(truth.moves)
    assert seq.session_id == "figure1_like"
    assert seq.texts == (
        "INSERT_prompt", "MODIFY_prompt",
        "GENERATION_image", "GENERATION_image", "GENERATION_image",
        "REMOVE_image", "INSERT_image", "MODIFY_image", "GENERATION_image",
        "MODIFY_prompt", "GENERATION_image", "REMOVE_image", "GENERATION_image",
        "GENERATION_video", "MODIFY_video", "GENERATION_video", "MODIFY_video",
    )
    assert seq == truth.tokens


def test_vocabulary(figure1):
    _, truth = figure1
    assert dict(vocabulary(tokenize(truth.moves)))["GENERATION_image"] == 6


def test_empty():
    seq = tokenize([])
    assert len(seq) == 0
    assert write_tokens(seq) == ""


def test_tokens_file(figure1):
    _, truth = figure1
    seq = tokenize(truth.moves)
    text = write_tokens(seq)
    assert text.count("\n") == 17
    assert read_tokens(text, seq.session_id) == seq
