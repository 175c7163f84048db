"""Hot kernels with a numba and a pure-numpy implementation.

The active backend follows ``dprem._accel.BACKEND``; ``backend(name)`` returns
either module explicitly (used by the benchmark and the agreement tests).
"""
from types import ModuleType

from .. import _accel
from . import _numpy
from .hashing import DIST_CODES

__all__ = ["DIST_CODES", "active", "available_backends", "backend"]


def available_backends() -> list[str]:
    return ["numba", "numpy"] if _accel.HAVE_NUMBA else ["numpy"]


def backend(name: str) -> ModuleType:
    if name == "numpy":
        return _numpy
    if name == "numba":
        if not _accel.HAVE_NUMBA:
            raise RuntimeError("numba backend requested but unavailable or disabled")
        from . import _numba

        return _numba
    raise ValueError(f"unknown backend {name!r}")


active = backend(_accel.BACKEND)
