"""Optional numba acceleration.

Set ``LOOPHODGE_DISABLE_NUMBA=1`` to run every hot kernel through its pure
numpy fallback (also used automatically when numba is not importable).
"""

from __future__ import annotations

import os

_FLAG = os.environ.get("LOOPHODGE_DISABLE_NUMBA", "").strip().lower()
DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

HAVE_NUMBA = _numba is not None
ENABLED = HAVE_NUMBA and not DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when available, else the undecorated function."""
    if HAVE_NUMBA:
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f
