"""Numba switch.

Hot kernels in :mod:`procay.kernels` are written twice: an explicit-loop
version compiled with ``numba.njit`` and a vectorised numpy version. The
loop versions are used when numba imports and ``PROCAY_DISABLE_NUMBA`` is
unset (or ``0``); otherwise the numpy versions are bound.
"""

import os

_FALSY = {"", "0", "false", "no", "off"}


def _numba_requested():
    return os.environ.get("PROCAY_DISABLE_NUMBA", "").strip().lower() in _FALSY


try:
    import numba as _numba
except ImportError:  # pragma: no cover - exercised only without numba
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and _numba_requested()


def njit(fn):
    """Compile ``fn`` with numba (nopython, cached); identity without numba."""
    if not HAVE_NUMBA:
        return fn
    return _numba.njit(cache=True, nogil=True)(fn)


def thread_cap():
    """Worker cap from ``PROCAY_THREADS`` (positive int, default 1)."""
    raw = os.environ.get("PROCAY_THREADS", "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        return 1
    return max(1, value)
