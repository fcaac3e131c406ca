"""Rollout-kernel selection.

Prefers the compiled extension, falls back to the numpy implementation.
Set ``ETCDOS_BACKEND=python`` to force the fallback (used by the parity
tests and the benchmark).
"""

from __future__ import annotations

import os

from . import _rollout_py

_impl = _rollout_py
if os.environ.get("ETCDOS_BACKEND", "").lower() != "python":
    try:
        from . import _rollout as _ext
        _impl = _ext
    except ImportError:
        pass

rollout = _impl.rollout
BACKEND = _impl.BACKEND


def backend_name() -> str:
    """Which rollout kernel is active: "cython" or "python"."""
    return BACKEND
