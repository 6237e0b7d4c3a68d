"""Compare the compiled and pure-Python kernels on fixture-sized inputs.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints one line per kernel with the best-of-N time for each implementation
and the speedup. Outputs of both implementations are checked for equality
before timing.
"""

from __future__ import annotations

import argparse
import random
import sys
import timeit
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

import fixtures  # noqa: E402
from termforge import kernels  # noqa: E402
from termforge.dictionary import LanguagePair  # noqa: E402


def workloads():
    d = LanguagePair("en", "de")
    rows = fixtures.segments(d, 2000)
    text = " ".join(r["source"] for r in rows)
    table = {t[0].lower(): i for i, t in enumerate(fixtures.TERMS)}
    lengths = sorted({len(k) for k in table}, reverse=True)
    refs = [r["reference"] for r in rows]
    rng = random.Random(0)
    hyps = [" ".join(rng.sample(s.split(), len(s.split()))) for s in refs]
    chars_h, chars_r = "".join(hyps).replace(" ", ""), "".join(refs).replace(" ", "")
    toks_h, toks_r = " ".join(hyps).split(), " ".join(refs).split()

    def norm(impl):
        return impl.normalize_with_offsets(text)

    def scan(impl, norm_text=kernels._kernels_py.normalize_with_offsets(text)[0]):
        return impl.scan_spans(norm_text, table, lengths)

    def ngrams(impl):
        return [impl.ngram_counts(chars_h, n) for n in range(1, 7)] + [impl.ngram_counts(toks_h, n) for n in (1, 2)]

    def clipped(impl, pre={}):
        if id(impl) not in pre:
            pre[id(impl)] = [(impl.ngram_counts(chars_h, n), impl.ngram_counts(chars_r, n)) for n in range(1, 7)] + [
                (impl.ngram_counts(toks_h, n), impl.ngram_counts(toks_r, n)) for n in (1, 2)]
        return [impl.clipped_matches(h, r) for h, r in pre[id(impl)]]

    return {"normalize_with_offsets": norm, "scan_spans": scan, "ngram_counts": ngrams, "clipped_matches": clipped}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    impls = kernels.implementations()
    if "cython" not in impls:
        print("compiled kernels not built; only the Python fallback is available")
    print(f"{'kernel':<24}" + "".join(f"{name:>12}" for name in sorted(impls)) + f"{'speedup':>10}")
    for name, fn in workloads().items():
        results = {k: fn(impl) for k, impl in impls.items()}
        if len({repr(v) for v in results.values()}) != 1:
            print(f"{name}: implementations disagree", file=sys.stderr)
            return 1
        times = {k: min(timeit.repeat(lambda impl=impl: fn(impl), number=1, repeat=args.repeat))
                 for k, impl in impls.items()}
        speed = times["python"] / times["cython"] if "cython" in times else 1.0
        print(f"{name:<24}" + "".join(f"{times[k] * 1e3:>10.2f}ms" for k in sorted(impls)) + f"{speed:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
