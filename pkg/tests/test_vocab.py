"""Vocabulary filter behavior on the stock word lists."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vividforge.vocab import (
    ADJECTIVES,
    BACKGROUND_LABELS,
    COLORS,
    REPEATED_CHARACTER_DESCRIPTIONS,
    VERBS,
    VocabularyConfig,
    filter_labels,
)

VOCAB = VocabularyConfig()


class TestForeground:
    def test_color_word_removed(self):
        assert filter_labels(["blue", "dog"], "foreground", VOCAB) == ["dog"]

    def test_verb_removed(self):
        assert filter_labels(["kiss", "sky"], "foreground", VOCAB) == ["sky"]

    def test_multiword_label_removed_exactly(self):
        assert filter_labels(["person man", "man"], "foreground", VOCAB) == ["man"]

    def test_no_substring_matching(self):
        # "redwood" contains the color "red" but is not itself stoplisted
        assert filter_labels(["redwood"], "foreground", VOCAB) == ["redwood"]

    def test_every_stoplist_word_removed(self):
        words = list(ADJECTIVES + VERBS + COLORS + REPEATED_CHARACTER_DESCRIPTIONS)
        assert filter_labels(words, "foreground", VOCAB) == []

    def test_case_insensitive(self):
        assert filter_labels(["Blue", "DOG"], "foreground", VOCAB) == ["dog"]


class TestBackground:
    def test_allowlist_only(self):
        assert filter_labels(["sky", "dog"], "background", VOCAB) == ["sky"]

    def test_every_allowlist_word_survives(self):
        words = list(BACKGROUND_LABELS)
        assert filter_labels(words, "background", VOCAB) == [w.lower() for w in words]

    def test_order_preserved_duplicates_dropped(self):
        out = filter_labels(["water", "sky", "water", "ocean"], "background", VOCAB)
        assert out == ["water", "sky", "ocean"]


def test_unknown_mode_rejected():
    with pytest.raises(ValueError):
        filter_labels(["x"], "sideways", VOCAB)


def test_lists_are_deduplicated_lowercase():
    for words in (
        VOCAB.adjectives,
        VOCAB.verbs,
        VOCAB.colors,
        VOCAB.repeated_character_descriptions,
        VOCAB.background_allowlist,
    ):
        assert len(set(words)) == len(words)
        assert all(w == w.lower() for w in words)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.text(alphabet="abcdefghij klmno", min_size=1, max_size=12)))
def test_filter_idempotent(labels):
    for mode in ("foreground", "background"):
        once = filter_labels(labels, mode, VOCAB)
        assert filter_labels(once, mode, VOCAB) == once


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from(sorted(VOCAB.foreground_stoplist)), max_size=10))
def test_no_stoplist_word_survives(words):
    assert filter_labels(words, "foreground", VOCAB) == []
