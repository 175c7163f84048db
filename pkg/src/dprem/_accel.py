"""Backend selection for the hot kernels.

Set ``DPREM_DISABLE_NUMBA=1`` to force the pure-numpy implementations. The
flag is read once at import time.
"""
import os

_DISABLE = os.environ.get("DPREM_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLE:
        raise ImportError("numba disabled by DPREM_DISABLE_NUMBA")
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"
