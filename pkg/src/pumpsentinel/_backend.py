"""Transform backend selection: compiled core when built, numpy fallback otherwise.

Set PUMP_SENTINEL_BACKEND=python to force the fallback (used by the benchmark
and backend-parity tests).
"""

from __future__ import annotations

import os

from . import _transform_py

_FORCED = os.environ.get("PUMP_SENTINEL_BACKEND", "").lower()

if _FORCED == "python":
    _impl = _transform_py
    BACKEND = "python"
else:
    try:
        from . import _transform_cy as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _transform_py
        BACKEND = "python"

apply_kernels = _impl.apply_kernels


def backend_name() -> str:
    """Name of the active transform backend: 'cython' or 'python'."""
    return BACKEND
