"""Pure-Python kernels. Must stay behaviourally identical to ``_ckernels.pyx``."""

from __future__ import annotations


def normalize_with_offsets(text: str) -> tuple[str, list[int]]:
    """Lowercase ``text`` and collapse whitespace runs to one space.

    Returns the normalized string and, for each of its characters, the index
    of the originating character in ``text``.
    """
    chars: list[str] = []
    offsets: list[int] = []
    in_space = False
    for i, ch in enumerate(text):
        if ch.isspace():
            if not in_space:
                chars.append(" ")
                offsets.append(i)
                in_space = True
            continue
        in_space = False
        for folded in ch.lower():
            chars.append(folded)
            offsets.append(i)
    return "".join(chars), offsets


def scan_spans(norm: str, table: dict[str, int], lengths: list[int]) -> list[tuple[int, int, int]]:
    # lengths must be sorted descending; a match needs non-alnum (or edge) on both sides
    n = len(norm)
    out: list[tuple[int, int, int]] = []
    i = 0
    while i < n:
        if i == 0 or not norm[i - 1].isalnum():
            for length in lengths:
                j = i + length
                if j > n:
                    continue
                if j < n and norm[j].isalnum():
                    continue
                key = table.get(norm[i:j])
                if key is not None:
                    out.append((i, j, key))
                    break
            else:
                i += 1
                continue
            i = j
            continue
        i += 1
    return out


def ngram_counts(seq, n: int) -> dict:
    """Count order-``n`` n-grams of a string (substrings) or a token list (tuples)."""
    counts: dict = {}
    if isinstance(seq, str):
        for i in range(len(seq) - n + 1):
            gram = seq[i:i + n]
            counts[gram] = counts.get(gram, 0) + 1
    else:
        for i in range(len(seq) - n + 1):
            gram = tuple(seq[i:i + n])
            counts[gram] = counts.get(gram, 0) + 1
    return counts


def clipped_matches(hyp: dict, ref: dict) -> int:
    total = 0
    for gram, count in hyp.items():
        other = ref.get(gram)
        if other:
            total += count if count < other else other
    return total
