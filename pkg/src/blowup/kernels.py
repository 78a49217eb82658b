"""Kernel selection: the compiled extension when built, numpy otherwise.

Set ``BLOWUP_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py as pure

BACKEND = "python"
if os.environ.get("BLOWUP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as compiled  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        compiled = None
else:
    compiled = None

_impl = compiled if compiled is not None else pure

hom_count = _impl.hom_count
pair_deviation_exact = _impl.pair_deviation_exact
