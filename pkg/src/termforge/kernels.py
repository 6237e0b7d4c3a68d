"""Hot-loop kernels, compiled when available.

The Cython extension ``_ckernels`` is used if it was built; otherwise the
pure-Python module is loaded. Set ``TERMFORGE_PURE_PYTHON=1`` to force the
fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("TERMFORGE_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "cython"

normalize_with_offsets = _impl.normalize_with_offsets
scan_spans = _impl.scan_spans
ngram_counts = _impl.ngram_counts
clipped_matches = _impl.clipped_matches


def implementations() -> dict[str, object]:
    """All importable kernel implementations keyed by name."""
    impls: dict[str, object] = {"python": _kernels_py}
    try:
        from . import _ckernels  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        impls["cython"] = _ckernels
    return impls
