"""Backend switch for the compiled kernels.

Set ``PLNNFLAT_DISABLE_NUMBA=1`` to force the pure-numpy path.  The numpy
path is also used when numba cannot be imported.
"""
import os

_FLAG = os.environ.get("PLNNFLAT_DISABLE_NUMBA", "").strip().lower()

try:
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False
    _njit = None

USE_NUMBA = HAS_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator."""
    if HAS_NUMBA:
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def default_backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
