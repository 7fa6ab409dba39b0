"""Selects the transfer kernel at import time.

The compiled extension is used when it imports; GAPFLOW_BACKEND=numpy forces
the pure numpy path (also used automatically when the extension is missing).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from . import _fallback

_forced = os.environ.get("GAPFLOW_BACKEND", "").strip().lower()

if _forced in ("numpy", "python", "fallback"):
    _impl, BACKEND = _fallback, "numpy"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl, BACKEND = _fallback, "numpy"


def propagate(phi, h, z, xis, checkpoints, backend: str | None = None):
    impl = _impl if backend is None else (_fallback if backend == "numpy" else _kernels_module())
    return impl.propagate(phi, float(h), complex(z), xis, checkpoints)


def _kernels_module():
    from . import _kernels

    return _kernels


def default_threads() -> int:
    raw = os.environ.get("GAPFLOW_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return 1


def parallel_map(fn, items, threads: int | None = None) -> list:
    """Order-preserving map; the compiled kernel drops the GIL, so threads help there."""
    items = list(items)
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
