"""The i.i.d. space-time field eta(n, x), generated statelessly from a hash.

Values are a pure function of ``(master_seed, sample_index, n, x)`` (see
``dprem.kernels.hashing`` for the word layout), so enumeration order, lazy
evaluation and worker count cannot change a realized field. Gaussian values
use Box-Muller on two independent hash streams; the other kinds use a single
uniform through their inverse CDF.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import DIST_CODES
from .kernels import active as _k

_ALIASES = {"gaussian": "gaussian", "normal": "gaussian", "uniform": "uniform",
            "cexp": "cexp", "centered_exponential": "cexp"}


@dataclass(frozen=True)
class DistributionSpec:
    """Mean-zero, variance-one law of a single field value."""

    kind: str = "gaussian"

    def __post_init__(self):
        kind = _ALIASES.get(self.kind)
        if kind is None:
            raise ValueError(f"unknown distribution {self.kind!r}; expected gaussian, uniform or cexp")
        object.__setattr__(self, "kind", kind)

    @property
    def code(self) -> int:
        return DIST_CODES[self.kind]

    @property
    def third_abs_moment(self) -> float:
        if self.kind == "gaussian":
            return 2.0 * math.sqrt(2.0 / math.pi)
        if self.kind == "uniform":
            return 3.0 * math.sqrt(3.0) / 4.0
        # E|Y - 1|^3 for Y ~ Exp(1)
        return 12.0 / math.e - 2.0


@dataclass(frozen=True)
class EnvField:
    dist: DistributionSpec
    master_seed: int
    sample_index: int = 0

    def value_at(self, n: int, x) -> float:
        return value_at(self, n, x)

    def values(self, n, x) -> np.ndarray:
        """Vectorized lookup: ``n`` of shape (k,), ``x`` of shape (k, d)."""
        n = np.atleast_1d(np.asarray(n, dtype=np.int64))
        x = np.asarray(x, dtype=np.int64).reshape(n.size, -1)
        if (n < 1).any():
            raise ValueError("time index must be >= 1")
        return _k.field_values(self.master_seed, self.sample_index, self.dist.code, n, x)

    def grid(self, d: int, N: int) -> np.ndarray:
        """Materialize times 1..N on the cube [-N, N]^d (layout of the energy kernel)."""
        return _k.field_grid(self.master_seed, self.sample_index, self.dist.code, d, N)

    def flipped(self) -> FlippedField:
        return FlippedField(self)


@dataclass(frozen=True)
class FlippedField:
    """The field with every value negated (still an admissible gaussian field)."""

    base: EnvField

    @property
    def dist(self) -> DistributionSpec:
        return self.base.dist

    def value_at(self, n: int, x) -> float:
        return -self.base.value_at(n, x)

    def values(self, n, x) -> np.ndarray:
        return -self.base.values(n, x)

    def grid(self, d: int, N: int) -> np.ndarray:
        return -self.base.grid(d, N)


def value_at(env: EnvField, n: int, x) -> float:
    return float(env.values([n], np.atleast_1d(np.asarray(x, dtype=np.int64))[None, :])[0])


def char_fn(dist: DistributionSpec, t):
    """Analytic characteristic function E exp(i t X); vectorized over ``t``."""
    t_arr = np.asarray(t, dtype=np.float64)
    if dist.kind == "gaussian":
        out = np.exp(-0.5 * t_arr**2).astype(np.complex128)
    elif dist.kind == "uniform":
        # np.sinc(x) = sin(pi x) / (pi x)
        out = np.sinc(math.sqrt(3.0) * t_arr / math.pi).astype(np.complex128)
    else:
        out = np.exp(-1j * t_arr) / (1.0 - 1j * t_arr)
    return complex(out) if out.ndim == 0 else out


def abs_char_fn(dist: DistributionSpec, t):
    return np.abs(char_fn(dist, t))
