"""JIT switch for the numeric kernels.

Kernels are written in scalar Python so the same source runs compiled by
numba or interpreted. Set ``FASTSLOW_EPI_NO_NUMBA=1`` (or numba's own
``NUMBA_DISABLE_JIT=1``) to force the interpreted path.
"""
import os

_flag = os.environ.get("FASTSLOW_EPI_NO_NUMBA", "").strip().lower()

if _flag in ("", "0", "false", "no"):
    try:
        import numba
    except ImportError:  # pragma: no cover
        numba = None
else:
    numba = None

USE_NUMBA = numba is not None and os.environ.get("NUMBA_DISABLE_JIT", "0") in ("", "0")


def jit(fn):
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


def backend_name():
    return "numba" if USE_NUMBA else "python"
