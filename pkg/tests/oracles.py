"""Independent reference implementations used only by tests.

These avoid the package code paths on purpose: they recount n-grams by
list scanning, use exact fractions where possible and rebuild term matching
from a regex alternation.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction


def split_tokens(text: str) -> list[str]:
    out: list[str] = []
    word = ""
    for ch in text:
        if ch.isspace():
            if word:
                out.append(word)
            word = ""
        elif ch.isalnum() or ch == "_":
            word += ch
        else:
            if word:
                out.append(word)
            word = ""
            out.append(ch)
    if word:
        out.append(word)
    return out


def _grams(seq, n):
    return [tuple(seq[i:i + n]) for i in range(len(seq) - n + 1)]


def _clip(hyp_grams, ref_grams) -> int:
    remaining = list(ref_grams)
    hits = 0
    for g in hyp_grams:
        if g in remaining:
            remaining.remove(g)
            hits += 1
    return hits


def modified_precision(hyp: list[str], ref: list[str], n: int) -> Fraction:
    grams = _grams(hyp, n)
    return Fraction(_clip(grams, _grams(ref, n)), len(grams)) if grams else Fraction(0)


def bleu(hyps: list[str], refs: list[str], max_order: int = 4) -> float:
    hits = [0] * max_order
    totals = [0] * max_order
    c = r = 0
    for h, rf in zip(hyps, refs):
        ht, rt = split_tokens(h), split_tokens(rf)
        c += len(ht)
        r += len(rt)
        for n in range(1, max_order + 1):
            hg = _grams(ht, n)
            hits[n - 1] += _clip(hg, _grams(rt, n))
            totals[n - 1] += len(hg)
    if c == 0 or 0 in hits or 0 in totals:
        return 0.0
    prod = 1.0
    for m, t in zip(hits, totals):
        prod *= m / t
    geo = prod ** (1.0 / max_order)
    bp = math.exp(1.0 - r / c) if c <= r else 1.0
    return 100.0 * bp * geo


def chrf(hyps: list[str], refs: list[str], char_order: int = 6, word_order: int = 2, beta: float = 2.0) -> float:
    kinds = [("c", n) for n in range(1, char_order + 1)] + [("w", n) for n in range(1, word_order + 1)]
    sums = {k: [0, 0, 0] for k in kinds}
    for h, rf in zip(hyps, refs):
        for kind, n in kinds:
            if kind == "c":
                hs = list(h.replace(" ", "").replace("\t", "").replace("\n", ""))
                rs = list(rf.replace(" ", "").replace("\t", "").replace("\n", ""))
            else:
                hs, rs = split_tokens(h), split_tokens(rf)
            hg, rg = _grams(hs, n), _grams(rs, n)
            sums[(kind, n)][0] += len(hg)
            sums[(kind, n)][1] += len(rg)
            sums[(kind, n)][2] += _clip(hg, rg)
    ps, rs_ = [], []
    for hn, rn, m in sums.values():
        if hn == 0 and rn == 0:
            continue
        ps.append(m / hn if hn else 0.0)
        rs_.append(m / rn if rn else 0.0)
    if not ps:
        return 0.0
    p, r = sum(ps) / len(ps), sum(rs_) / len(rs_)
    if p == 0 and r == 0:
        return 0.0
    b2 = beta ** 2
    return 100.0 * (1 + b2) * p * r / (b2 * p + r)


def term_spans(text: str, terms: list[str]) -> list[tuple[int, int, str]]:
    """Longest-first boundary matching via one regex alternation.

    Only valid for text whose lowercase form has the same length and no
    repeated whitespace (the tests generate such text).
    """
    if not terms:
        return []
    folded = sorted({t.lower() for t in terms}, key=lambda t: (-len(t), t))
    alt = "|".join(re.escape(t) for t in folded)
    rx = re.compile(rf"(?<![^\W_])(?:{alt})(?![^\W_])")
    return [(m.start(), m.end(), m.group(0)) for m in rx.finditer(text.lower())]


def sr_containment(hyps: list[str], required: list[list[str]], case_sensitive: bool = True) -> float:
    found = total = 0
    for h, terms in zip(hyps, required):
        hh = " ".join(h.split())
        for t in terms:
            tt = " ".join(t.split())
            total += 1
            if case_sensitive:
                found += tt in hh
            else:
                found += tt.lower() in hh.lower()
    return found / total if total else 1.0


def all_sentences(vocab=("a", "b", "c"), max_len: int = 4) -> list[str]:
    """Every token sequence of length 0..max_len over ``vocab``, space-joined."""
    out = [""]
    layer = [[]]
    for _ in range(max_len):
        layer = [seq + [w] for seq in layer for w in vocab]
        out.extend(" ".join(seq) for seq in layer)
    return out
