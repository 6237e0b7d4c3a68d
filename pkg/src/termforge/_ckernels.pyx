# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled versions of the kernels in ``_kernels_py``."""


def normalize_with_offsets(str text):
    cdef Py_ssize_t i, n = len(text)
    cdef Py_UCS4 ch
    cdef bint in_space = False
    cdef list chars = []
    cdef list offsets = []
    cdef str folded
    for i in range(n):
        ch = text[i]
        if ch.isspace():
            if not in_space:
                chars.append(" ")
                offsets.append(i)
                in_space = True
            continue
        in_space = False
        folded = ch.lower()
        if len(folded) == 1:
            chars.append(folded)
            offsets.append(i)
        else:
            for f in folded:
                chars.append(f)
                offsets.append(i)
    return "".join(chars), offsets


def scan_spans(str norm, dict table, list lengths):
    cdef Py_ssize_t n = len(norm)
    cdef Py_ssize_t i = 0, j, length, k
    cdef Py_ssize_t nlen = len(lengths)
    cdef list out = []
    cdef bint found
    cdef object key
    while i < n:
        if i == 0 or not norm[i - 1].isalnum():
            found = False
            for k in range(nlen):
                length = lengths[k]
                j = i + length
                if j > n:
                    continue
                if j < n and norm[j].isalnum():
                    continue
                key = table.get(norm[i:j])
                if key is not None:
                    out.append((i, j, key))
                    found = True
                    break
            if found:
                i = j
                continue
        i += 1
    return out


def ngram_counts(seq, int n):
    cdef dict counts = {}
    cdef Py_ssize_t i, m
    cdef str s
    cdef list toks
    cdef object gram
    if isinstance(seq, str):
        s = seq
        m = len(s) - n + 1
        for i in range(m):
            gram = s[i:i + n]
            counts[gram] = counts.get(gram, 0) + 1
    else:
        toks = list(seq)
        m = len(toks) - n + 1
        for i in range(m):
            gram = tuple(toks[i:i + n])
            counts[gram] = counts.get(gram, 0) + 1
    return counts


def clipped_matches(dict hyp, dict ref):
    cdef Py_ssize_t total = 0
    cdef Py_ssize_t count, other
    cdef object o
    for gram, c in hyp.items():
        o = ref.get(gram)
        if o is not None:
            count = c
            other = o
            total += count if count < other else other
    return total
