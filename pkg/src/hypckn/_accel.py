"""Optional numba acceleration.

Hot kernels are written once as plain Python loops and compiled with
``numba.njit`` when numba is importable.  Setting ``HYPCKN_NO_NUMBA=1`` in
the environment (before import) forces the pure numpy/scipy code paths.
"""

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

_FLAG = os.environ.get("HYPCKN_NO_NUMBA", "").strip().lower()
USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def optional_njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""

    def decorator(func):
        if HAVE_NUMBA:
            return numba.njit(*args, **kwargs)(func)
        return func

    return decorator


def backend_name(use_numba=None):
    if use_numba is None:
        use_numba = USE_NUMBA
    return "numba" if use_numba else "numpy"
