"""Kernel selection: compiled extension when available, numpy otherwise.

Set PERFWEAVE_KERNEL=numpy (or =cython) to force a side; forcing cython
when the extension is absent raises at import time rather than silently
degrading a benchmark.
"""

from __future__ import annotations

import os

from . import _ccf_numpy

_forced = os.environ.get("PERFWEAVE_KERNEL", "").strip().lower()

if _forced == "numpy":
    _impl = _ccf_numpy
    KERNEL_NAME = "numpy"
else:
    try:
        from . import _ccf_ext as _impl  # type: ignore[no-redef]

        KERNEL_NAME = "cython"
    except ImportError:
        if _forced == "cython":
            raise
        _impl = _ccf_numpy
        KERNEL_NAME = "numpy"

pair_ccf = _impl.pair_ccf
all_pairs_best = _impl.all_pairs_best
