"""Terminology-constrained translation toolkit.

Dictionary building, tagged synthetic data, tag standardization, QE
filtering, LLM post-editing, submission checks and evaluation.
"""

from .dictionary import LanguagePair, TermDictionary, TermPair, load_dictionary, lookup, merge_expansions
from .kernels import BACKEND as KERNEL_BACKEND
from .tagging import TaggedSegment, find_term_spans, retag_pair, strip_tags, verify_tags

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "LanguagePair",
    "TaggedSegment",
    "TermDictionary",
    "TermPair",
    "find_term_spans",
    "load_dictionary",
    "lookup",
    "merge_expansions",
    "retag_pair",
    "strip_tags",
    "verify_tags",
]
