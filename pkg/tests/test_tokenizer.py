"""Whitespace tokenizer: round trips, specials, vocabulary growth."""

import pytest
from hypothesis import given, settings, strategies as st

from petsumm.errors import TokenCollisionError
from petsumm.tokenizer import WordTokenizer

words = st.text(alphabet="abcdefg.012", min_size=1, max_size=8)


@pytest.fixture()
def tok():
    return WordTokenizer.build(["the liver shows uptake",
                                "uptake in the spleen ."])


def test_specials_have_fixed_low_ids(tok):
    assert tok.pad_id == 0
    assert tok.bos_id == 1
    assert tok.eos_id == 2
    assert tok.unk_id == 3


def test_encode_decode_round_trip(tok):
    text = "the liver shows uptake ."
    ids = tok.encode(text)
    assert tok.decode(ids) == text


@given(st.lists(words, min_size=1, max_size=12))
@settings(max_examples=100, deadline=None)
def test_round_trip_over_known_vocabulary(tokens):
    text = " ".join(tokens)
    tok = WordTokenizer.build([text])
    assert tok.decode(tok.encode(text)) == text


def test_unknown_words_map_to_unk(tok):
    ids = tok.encode("the pancreas")
    assert ids[0] == tok.token_to_id("the")
    assert ids[1] == tok.unk_id


def test_bos_eos_wrapping(tok):
    ids = tok.encode("uptake", add_bos=True, add_eos=True)
    assert ids[0] == tok.bos_id and ids[-1] == tok.eos_id
    assert tok.decode(ids, skip_special=True) == "uptake"


def test_add_tokens_idempotent(tok):
    size = len(tok)
    tok.add_tokens(["[PHYS0001]", "[PHYS0002]"])
    grown = len(tok)
    assert grown == size + 2
    tok.add_tokens(["[PHYS0001]"])
    assert len(tok) == grown


def test_add_tokens_rejects_whitespace(tok):
    with pytest.raises(TokenCollisionError):
        tok.add_tokens(["two words"])


def test_save_load_round_trip(tmp_path, tok):
    tok.add_tokens(["[PHYS0009]"])
    path = tmp_path / "tok.json"
    tok.save(path)
    loaded = WordTokenizer.load(path)
    assert len(loaded) == len(tok)
    text = "the liver shows uptake [PHYS0009]"
    assert loaded.encode(text) == tok.encode(text)


def test_build_is_deterministic():
    texts = ["b a c", "c b d"]
    first = WordTokenizer.build(texts)
    second = WordTokenizer.build(list(reversed(texts)))
    assert first.encode("a b c d") == second.encode("a b c d")
