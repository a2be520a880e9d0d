import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leadsum import textproc
from leadsum.textproc import (
    Sentence,
    clean_prefix,
    collapse_whitespace,
    ngrams,
    segment_sentences,
    tokenize,
    word_surfaces,
)

# -- clean_prefix --------------------------------------------------------------


@pytest.mark.parametrize(
    "raw, cleaned",
    [
        ("New York (CNN) -- The storm hit the coast.", "The storm hit the coast."),
        ("Jones Smith, May 10th, 2018: Markets rose today.", "Markets rose today."),
        ("Markets rose today.", "Markets rose today."),
        ("LONDON (Reuters) - Shares fell.", "Shares fell."),
        ("(AP) — Voters lined up early.", "Voters lined up early."),
        ("WASHINGTON (CNN)  --  Congress met.", "Congress met."),
        ("March 3, 2019: Rain again.", "Rain again."),
        ("", ""),
    ],
)
def test_clean_prefix_examples(raw, cleaned):
    assert clean_prefix(raw) == cleaned


def test_clean_prefix_only_at_start():
    text = "Markets rose. New York (CNN) -- later text."
    assert clean_prefix(text) == text


def test_clean_prefix_custom_rules():
    assert clean_prefix("BREAKING: News here.", [r"BREAKING:\s*"]) == "News here."
    assert clean_prefix("BREAKING: News here.", []) == "BREAKING: News here."


def test_clean_prefix_ignores_empty_matches():
    assert clean_prefix("abc", [r"x*"]) == "abc"


_prefixish = st.lists(
    st.sampled_from(
        ["New York ", "(CNN) ", "(Reuters)", "-- ", "—", ": ", "May 10th, 2018:", "Jones Smith, ",
         "The storm.", " ", "\n", "a", "LONDON", "March 3, 2019: "]
    ),
    max_size=8,
).map("".join)


@settings(max_examples=300, deadline=None)
@given(st.one_of(_prefixish, st.text(max_size=60)))
def test_clean_prefix_idempotent(text):
    once = clean_prefix(text)
    assert clean_prefix(once) == once


# -- segment_sentences ------------------------------------------------------------


def test_segment_examples():
    assert segment_sentences("") == []
    assert [s.text for s in segment_sentences("It rained. Dr. Smith left. Done!")] == [
        "It rained.", "Dr. Smith left.", "Done!"
    ]
    assert [s.text for s in segment_sentences("no terminator")] == ["no terminator"]


def _gold_documents(path):
    docs, cur = [], []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip() == "---":
            docs.append(cur)
            cur = []
        elif line.strip():
            cur.append(line.strip())
    if cur:
        docs.append(cur)
    return docs


def test_segment_gold_fixture(data_dir):
    docs = _gold_documents(data_dir / "sentences_gold.txt")
    assert sum(len(d) for d in docs) == 200
    wrong = []
    for gold in docs:
        got = [s.text for s in segment_sentences(" ".join(gold))]
        if got != gold:
            wrong.append((gold, got))
    assert not wrong, wrong[:3]


def test_segment_gold_fixture_with_newlines(data_dir):
    for gold in _gold_documents(data_dir / "sentences_gold.txt"):
        assert [s.text for s in segment_sentences("\n".join(gold))] == gold


def test_segment_terminators_and_quotes():
    text = 'He asked, "Why?" Nobody knew. What now?! Wait... It ended.'
    assert [s.text for s in segment_sentences(text)] == [
        'He asked, "Why?"', "Nobody knew.", "What now?!", "Wait...", "It ended."
    ]


def test_segment_lowercase_continuation_does_not_split():
    assert len(segment_sentences("The vote was 5 vs. 4 in favor. it passed anyway.")) == 1


def test_segment_paragraph_break_splits():
    assert [s.text for s in segment_sentences("Headline without stop\n\nBody starts here.")] == [
        "Headline without stop", "Body starts here."
    ]


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet=st.sampled_from(list("ab .!?\n\"Dr.U.S ")), max_size=80) | st.text(max_size=80))
def test_segment_spans_cover_input(text):
    sents = segment_sentences(text)
    prev_end = 0
    for s in sents:
        start, end = s.char_span
        assert prev_end <= start < end <= len(text)
        assert text[start:end] == s.text
        assert s.text == s.text.strip() and s.text
        prev_end = end
    joined = "".join(s.text for s in sents)
    assert re.sub(r"\s", "", joined) == re.sub(r"\s", "", text)


# -- tokenize -----------------------------------------------------------------


def oracle_tokens(text):
    """Character-scanning word splitter, written independently of the regex.

    Word characters are letters and digits.  An apostrophe stays inside a
    word only between two word characters.  A run of digits may absorb
    ``.`` or ``,`` followed by more digits (``1,000``, ``3.5``).
    """
    text = text.casefold().replace("\u2019", "'")
    out, i, n = [], 0, len(text)

    def is_word(c):
        return c.isalnum()

    while i < n:
        if not is_word(text[i]):
            i += 1
            continue
        j = i
        if text[i].isdigit():
            # Number-with-separators candidate: only digits and [.,] digit groups.
            k = i
            while k < n and text[k].isdigit() and text[k].isdecimal():
                k += 1
            groups = 0
            while k + 1 < n and text[k] in ".," and text[k + 1].isdecimal() and text[k + 1].isdigit():
                k += 1
                while k < n and text[k].isdigit() and text[k].isdecimal():
                    k += 1
                groups += 1
            if groups:
                out.append(text[i:k])
                i = k
                continue
        while j < n and is_word(text[j]):
            j += 1
        while j + 1 < n and text[j] == "'" and is_word(text[j + 1]):
            j += 1
            while j < n and is_word(text[j]):
                j += 1
        out.append(text[i:j])
        i = j
    return out


HAND_TOKENIZED = [
    ("", []),
    ("Hello HELLO", ["hello", "hello"]),
    ("The cat's hat, 2018.", ["the", "cat's", "hat", "2018"]),
    ("Don't stop -- it's 3.5% of $1,000!", ["don't", "stop", "it's", "3.5", "of", "1,000"]),
    ("U.S. troops rock'n'roll", ["u", "s", "troops", "rock'n'roll"]),
    ("'Quoted' words' end", ["quoted", "words", "end"]),
    ("Café naïve ÉCOLE", ["café", "naïve", "école"]),
    ("e-mail state_of_art", ["e", "mail", "state", "of", "art"]),
    ("... -- !!", []),
    ("It\u2019s", ["it's"]),
]


@pytest.mark.parametrize("text, expected", HAND_TOKENIZED)
def test_tokenize_hand_fixture(text, expected):
    assert [t.surface for t in tokenize(text)] == expected
    assert oracle_tokens(text) == expected


def test_tokenize_stopword_flags():
    toks = tokenize("The cat's hat, 2018.")
    assert [t.is_stopword for t in toks] == [True, False, False, False]
    stop = textproc.default_stopwords()
    assert all(t.is_stopword == (t.surface in stop) for t in tokenize("And then we were all there for it."))


def test_tokenize_sentence_and_custom_stopwords():
    s = Sentence("Storm hits coast", (0, 16))
    assert [t.is_stopword for t in tokenize(s, frozenset({"coast"}))] == [False, False, True]


_ascii_words = st.text(alphabet=st.sampled_from(list("abcXYZ019'.,-_ \u2019é!")), max_size=40)


@settings(max_examples=500, deadline=None)
@given(st.one_of(_ascii_words, st.text(max_size=40)))
def test_tokenize_matches_oracle(text):
    assert word_surfaces(text) == oracle_tokens(text)


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=40))
def test_tokens_have_alnum(text):
    for t in tokenize(text):
        assert t.surface and any(c.isalnum() for c in t.surface)


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=40))
def test_tokenize_case_invariant(text):
    # Restrict to characters whose case mapping round-trips under casefold;
    # a few (e.g. dotless i) change identity when upper-cased.
    text = "".join(c for c in text if c.upper().casefold() == c.casefold() and len(c.upper()) == 1)
    surfaces = [t.surface for t in tokenize(text)]
    assert [t.surface for t in tokenize(text.upper())] == surfaces
    assert [t.surface for t in tokenize(text.lower())] == surfaces


# -- ngrams -------------------------------------------------------------------


def test_ngrams_examples():
    assert ngrams(["a", "b", "c"], 2) == {("a", "b"), ("b", "c")}
    assert ngrams(["a"], 2) == set()
    assert ngrams(["a", "b", "a", "b"], 2) == {("a", "b"), ("b", "a")}
    assert ngrams(tokenize("a b"), 1) == {("a",), ("b",)}


def test_ngrams_rejects_zero():
    with pytest.raises(ValueError):
        ngrams(["a"], 0)


@given(st.lists(st.sampled_from("abcd"), max_size=15), st.integers(1, 6))
def test_ngrams_size_bound(tokens, n):
    grams = ngrams(tokens, n)
    assert len(grams) <= max(0, len(tokens) - n + 1)
    assert all(len(g) == n for g in grams)


# -- misc ---------------------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=200))
def test_word_count_is_sum_of_sentence_counts(text):
    per_sentence = sum(len(tokenize(s)) for s in segment_sentences(text))
    assert per_sentence == len(word_surfaces(text))


def test_bundled_resources():
    stop = textproc.default_stopwords()
    assert 150 <= len(stop) <= 200
    assert {"the", "and", "of"} <= stop
    assert all(w == w.casefold() for w in stop)
    assert len(textproc.default_prefix_patterns()) >= 2


def test_load_resources_from_files(tmp_path):
    sw = tmp_path / "stop.txt"
    sw.write_text("# comment\nFoo\n\nbar\n", encoding="utf-8")
    assert textproc.load_stopwords(sw) == frozenset({"foo", "bar"})
    pp = tmp_path / "pp.txt"
    pp.write_text("^X:\\s*\n", encoding="utf-8")
    (pat,) = textproc.load_prefix_patterns(pp)
    assert clean_prefix("X: y", [pat]) == "y"


def test_fingerprint_normalizes_case_and_space():
    assert textproc.fingerprint("A  b\nC") == textproc.fingerprint("a b c")
    assert textproc.fingerprint("a b c") != textproc.fingerprint("a b d")
    assert collapse_whitespace("  a \t b\n") == "a b"
