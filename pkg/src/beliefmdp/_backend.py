"""Simulation-kernel backend selection.

The compiled extension is preferred when importable; setting the
environment variable ``BELIEFMDP_PURE`` (to anything nonempty) forces the
pure-Python kernels.  Both backends are bit-identical; see
``benchmarks/bench_backends.py`` for the speed comparison.
"""

from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("BELIEFMDP_PURE"):
    kernels = _pykernels
else:
    try:
        from . import _ckernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _pykernels

BACKEND: str = kernels.BACKEND

__all__ = ["kernels", "BACKEND"]
