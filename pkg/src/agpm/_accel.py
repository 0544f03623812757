"""JIT selection.

Hot kernels are decorated with :func:`njit`.  When numba is importable and the
environment variable ``AGPM_DISABLE_NUMBA`` is unset (or ``0``), they are
compiled; otherwise the same source runs as plain Python over numpy arrays.
The flag is read once at import time.
"""

import os

_flag = os.environ.get("AGPM_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _flag not in ("", "0", "false", "no")

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    _numba = None

NUMBA_ENABLED = _numba is not None and not DISABLED_BY_ENV


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, identity decorator otherwise."""
    if NUMBA_ENABLED:
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(fn):
        return fn

    return wrap


def py_func(fn):
    """Return the uncompiled Python function behind a kernel."""
    return getattr(fn, "py_func", fn)
