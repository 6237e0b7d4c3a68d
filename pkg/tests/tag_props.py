"""Hypothesis strategies and property checks for term tagging."""

from __future__ import annotations

import re

from hypothesis import strategies as st

import oracles
from termforge.dictionary import LanguagePair, TermDictionary, TermPair
from termforge.tagging import find_term_spans, insert_tags, retag_pair, strip_tags, verify_tags

WORDS = {
    "data": "daten", "center": "zentrum", "cloud": "wolke", "storage": "speicher", "api": "schnittstelle",
    "key": "schluessel", "web": "netz", "server": "dienst", "the": "die", "fast": "schnell",
}
SEPARATORS = [" ", ", ", " - ", ". ", " (", ") "]
CASES = [str.lower, str.upper, str.capitalize]

_vocab = sorted(WORDS)


@st.composite
def term_sets(draw, max_terms: int = 8):
    phrases = draw(st.lists(st.lists(st.sampled_from(_vocab), min_size=1, max_size=3).map(tuple),
                            min_size=1, max_size=max_terms, unique=True))
    return [TermPair(" ".join(p), " ".join(WORDS[w] for w in p)) for p in phrases]


@st.composite
def sentence_pairs(draw, max_tokens: int = 20):
    """Word-aligned (source, target) texts with random casing and punctuation."""
    n = draw(st.integers(1, max_tokens))
    words = draw(st.lists(st.sampled_from(_vocab), min_size=n, max_size=n))
    cases = draw(st.lists(st.sampled_from(CASES), min_size=n, max_size=n))
    seps = draw(st.lists(st.sampled_from(SEPARATORS), min_size=n - 1, max_size=n - 1))
    src, tgt = [], []
    for k, (w, c) in enumerate(zip(words, cases)):
        src.append(c(w))
        tgt.append(c(WORDS[w]))
        if k < n - 1:
            src.append(seps[k])
            tgt.append(seps[k])
    return "".join(src), "".join(tgt)


def _boundary_occurrences(text: str, terms: list[str]) -> list[tuple[int, int]]:
    low = text.lower()
    out = []
    for t in {x.lower() for x in terms}:
        for m in re.finditer(rf"(?=(?<![^\W_]){re.escape(t)}(?![^\W_]))", low):
            out.append((m.start(), m.start() + len(t)))
    return out


def check_detection(src: str, terms: list[TermPair]) -> None:
    spans = find_term_spans(src, terms, "source")
    got = [(a, b, src[a:b].lower()) for a, b, _ in spans]
    assert got == oracles.term_spans(src, [t.source_term for t in terms])
    # non-overlapping, sorted
    assert all(spans[k][1] <= spans[k + 1][0] for k in range(len(spans) - 1))
    # longest-first dominance: a longer occurrence covering a span must start inside an earlier span
    occ = _boundary_occurrences(src, [t.source_term for t in terms])
    for a, b, _ in spans:
        for s, e in occ:
            if s <= a and e >= b and (e - s) > (b - a):
                assert any(x <= s < y and y <= a for x, y, _ in spans), (src, a, b, s, e)
    # case preservation: detected text is the original substring, folding to the term
    for a, b, pair in spans:
        assert src[a:b].lower() == pair.source_term.lower()


def check_retag(src: str, tgt: str, terms: list[TermPair]) -> None:
    d = TermDictionary.from_pairs(LanguagePair("en", "de"), terms)
    s_seg, t_seg, _ = retag_pair(src, tgt, d)
    # equal tag counts and valid markup
    assert len(s_seg.spans) == len(t_seg.spans)
    assert verify_tags(s_seg.text).span_count == verify_tags(t_seg.text).span_count == len(s_seg.spans)
    s_seg.check()
    t_seg.check()
    # only tags were added; original casing kept
    assert s_seg.stripped == src and t_seg.stripped == tgt
    for a, b, text in s_seg.spans:
        assert text == src[a:b]
    # strip / re-insert round trip
    stripped = strip_tags(s_seg.text)
    assert stripped.text == src
    assert [(a, b) for a, b, _ in stripped.spans] == [(a, b) for a, b, _ in s_seg.spans]
    assert insert_tags(stripped.text, stripped.spans) == s_seg.text
    # idempotence, also when fed its own tagged output
    s2, t2, _ = retag_pair(s_seg.text, t_seg.text, d)
    assert (s2, t2) == (s_seg, t_seg)


@st.composite
def tagged_strings(draw):
    """Build a tagged string with an independent inserter; return (tagged, plain, spans)."""
    tokens = draw(st.lists(st.sampled_from(["Cloud", "das", "ß", "x1", "a-b", "é"]), min_size=1, max_size=10))
    flags = draw(st.lists(st.booleans(), min_size=len(tokens), max_size=len(tokens)))
    plain, tagged, spans = "", "", []
    for k, (tok, flag) in enumerate(zip(tokens, flags)):
        if k:
            plain += " "
            tagged += " "
        if flag:
            spans.append((len(plain), len(plain) + len(tok), tok))
            tagged += "[TERM]" + tok + "[/TERM]"
        else:
            tagged += tok
        plain += tok
    return tagged, plain, spans
