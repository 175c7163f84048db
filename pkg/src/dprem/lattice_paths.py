"""Nearest-neighbour paths on Z^d, their encoding, and coincidence/return counts.

A path of length N is stored as N base-(2d) digits. Digit ``k`` moves along
axis ``k // 2`` in the positive direction when ``k`` is even and the negative
direction when odd. The PathId is the digit string read with the first step as
the most significant digit, so PathId order is depth-first (lexicographic)
order of the step tree.
"""
from __future__ import annotations

import csv
import io
import json
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import _parallel
from .errors import BudgetExceededError
from .kernels import active as _k

DEFAULT_PATH_CAP = 2**26
DEFAULT_PAIR_CAP = 2**26


def _check_dims(d: int, N: int) -> None:
    if d < 1 or N < 1:
        raise ValueError(f"need d >= 1 and N >= 1, got d={d}, N={N}")


def check_budget(what: str, needed: int, cap: int | None) -> None:
    if cap is not None and needed > cap:
        raise BudgetExceededError(what, needed, cap)


@dataclass(frozen=True)
class Path:
    dim: int
    digits: tuple[int, ...]

    def __post_init__(self):
        q = 2 * self.dim
        if self.dim < 1 or not self.digits:
            raise ValueError("a path needs d >= 1 and at least one step")
        if any(not 0 <= k < q for k in self.digits):
            raise ValueError(f"step digits must lie in [0, {q})")

    @property
    def length(self) -> int:
        return len(self.digits)

    @property
    def steps(self) -> tuple[int, ...]:
        """Signed axis labels: +j / -j for a move along axis j (1-based)."""
        return tuple((k // 2 + 1) * (1 - 2 * (k & 1)) for k in self.digits)

    @property
    def sites(self) -> np.ndarray:
        """Array of shape (N + 1, d); row 0 is the origin."""
        out = np.zeros((self.length + 1, self.dim), dtype=np.int64)
        for i, k in enumerate(self.digits):
            out[i + 1] = out[i]
            out[i + 1, k >> 1] += 1 - 2 * (k & 1)
        return out

    @property
    def path_id(self) -> int:
        return encode(self)

    @classmethod
    def from_steps(cls, dim: int, steps: Sequence[int]) -> Path:
        digits = []
        for s in steps:
            axis = abs(s) - 1
            if s == 0 or axis >= dim:
                raise ValueError(f"invalid step {s} in dimension {dim}")
            digits.append(2 * axis + (0 if s > 0 else 1))
        return cls(dim, tuple(digits))


@dataclass(frozen=True)
class PathTuple:
    paths: tuple[Path, ...]

    def __post_init__(self):
        if not self.paths:
            raise ValueError("empty tuple")
        d, N = self.paths[0].dim, self.paths[0].length
        if any(p.dim != d or p.length != N for p in self.paths):
            raise ValueError("all paths in a tuple must share (d, N)")
        if len(set(self.paths)) != len(self.paths):
            raise ValueError("tuple paths must be pairwise distinct")

    @property
    def l(self) -> int:  # noqa: E743
        return len(self.paths)

    @property
    def dim(self) -> int:
        return self.paths[0].dim

    @property
    def length(self) -> int:
        return self.paths[0].length

    @classmethod
    def from_ids(cls, d: int, N: int, ids: Sequence[int]) -> PathTuple:
        return cls(tuple(decode(d, N, int(i)) for i in ids))


def encode(path: Path) -> int:
    q = 2 * path.dim
    i = 0
    for k in path.digits:
        i = i * q + k
    return i


def decode(d: int, N: int, path_id: int) -> Path:
    _check_dims(d, N)
    q = 2 * d
    if not 0 <= path_id < q**N:
        raise ValueError(f"PathId {path_id} outside [0, {q}**{N})")
    digits = [0] * N
    for k in range(N - 1, -1, -1):
        path_id, digits[k] = divmod(path_id, q)
    return Path(d, tuple(digits))


def enumerate_paths(d: int, N: int, cap: int | None = DEFAULT_PATH_CAP) -> Iterator[Path]:
    """Yield all (2d)^N paths in PathId order."""
    _check_dims(d, N)
    total = (2 * d) ** N
    check_budget(f"enumerate_paths(d={d}, N={N})", total, cap)
    for i in range(total):
        yield decode(d, N, i)


def site_codes(d: int, N: int, start: int = 0, stop: int | None = None,
               include_origin: bool = True) -> np.ndarray:
    """Packed site codes for PathIds in [start, stop).

    Row ``i`` holds one integer per time step; site ``x`` packs to
    ``sum_j (x_j + N) * (2N + 1)**j`` so equal codes mean equal sites.
    """
    _check_dims(d, N)
    q = 2 * d
    stop = q**N if stop is None else stop
    W = 2 * N + 1
    wpow = W ** np.arange(d, dtype=np.int64)
    ids = np.arange(start, stop, dtype=np.int64)
    out = np.empty((ids.size, N + 1), dtype=np.int64)
    code = np.full(ids.size, N * int(wpow.sum()), dtype=np.int64)
    out[:, 0] = code
    for k in range(N):
        dig = (ids // q ** (N - 1 - k)) % q
        code = code + (1 - 2 * (dig & 1)) * wpow[dig >> 1]
        out[:, k + 1] = code
    return out if include_origin else out[:, 1:]


def coincidences(p1: Path, p2: Path, include_origin: bool = False) -> int:
    """Number of times m with equal positions; m in [0, N] or [1, N]."""
    if p1.dim != p2.dim or p1.length != p2.length:
        raise ValueError("paths must share (d, N)")
    s1, s2 = p1.sites, p2.sites
    if not include_origin:
        s1, s2 = s1[1:], s2[1:]
    return int(np.all(s1 == s2, axis=1).sum())


def pair_coincidence_histogram(d: int, N: int, cap: int | None = DEFAULT_PAIR_CAP) -> dict[int, int]:
    """Ordered pairs (equal pairs included) bucketed by coincidences over m in [0, N]."""
    _check_dims(d, N)
    check_budget(f"pair_coincidence_histogram(d={d}, N={N})", (2 * d) ** (2 * N), cap)
    hist = _k.coincidence_histogram(site_codes(d, N))
    return {s: int(c) for s, c in enumerate(hist) if c}


def return_count_histogram(d: int, horizon: int, cap: int | None = DEFAULT_PATH_CAP) -> dict[int, int]:
    """Walks of the given length bucketed by visits to the origin in [0, horizon]."""
    _check_dims(d, horizon)
    check_budget(f"return_count_histogram(d={d}, horizon={horizon})", (2 * d) ** horizon, cap)
    counts = _k.visit_histogram(d, horizon, 0, (2 * d) ** horizon)
    return {s: int(c) for s, c in enumerate(counts) if c}


def pair_tail_fraction(d: int, N: int, threshold: float, cap: int | None = DEFAULT_PAIR_CAP) -> float:
    """Exact fraction of ordered pairs with at least ``threshold`` coincidences in [0, N]."""
    hist = pair_coincidence_histogram(d, N, cap)
    total = sum(hist.values())
    return sum(c for s, c in hist.items() if s >= threshold) / total


@dataclass
class ReturnStats:
    dim: int
    horizon: int
    samples: int
    return_counts: dict[int, int]
    first_return: dict[int, int]
    no_return: int
    escape_horizon: int
    escape_prob: float | None = None
    notes: list[str] = field(default_factory=list)

    def first_return_tail(self, n: int) -> float:
        """Empirical P(W_2 - W_1 >= n); walks with no return by the horizon count as >= n."""
        if n > self.escape_horizon:
            raise ValueError("tail beyond the simulated horizon")
        late = sum(c for t, c in self.first_return.items() if t >= n)
        return (late + self.no_return) / self.samples


def return_stats_mc(d: int, N: int, samples: int, seed: int, horizon: int | None = None,
                    workers: int = 1) -> ReturnStats:
    """Monte Carlo return statistics of the simple random walk.

    Each walk runs at least N steps (for the visit count R_N) and keeps going
    up to ``horizon`` steps until its first return. A walk without a return by
    the horizon is counted as escaped, which biases the escape probability
    upward by P(horizon < first return < infinity).
    """
    _check_dims(d, N)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    horizon = N if horizon is None else max(horizon, N)

    def work(a, b):
        return _k.walk_returns(seed, d, N, horizon, a, b)

    parts = _parallel.map_ranges(work, samples, workers, chunk=max(1, -(-samples // max(1, workers * 4))))
    visits = np.concatenate([p[0] for p in parts])
    first = np.concatenate([p[1] for p in parts])
    rc = np.bincount(visits)
    returned = first[first > 0]
    fr = np.bincount(returned) if returned.size else np.zeros(0, dtype=np.int64)
    no_return = int((first < 0).sum())
    stats = ReturnStats(
        dim=d, horizon=N, samples=samples,
        return_counts={s: int(c) for s, c in enumerate(rc) if c},
        first_return={t: int(c) for t, c in enumerate(fr) if c},
        no_return=no_return, escape_horizon=horizon,
    )
    if d >= 3:
        stats.escape_prob = no_return / samples
        stats.notes.append(f"escape probability truncated at {horizon} steps (biased upward)")
    return stats


def histogram_to_csv(hist: Mapping[int, int]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s", "count"])
    for s in sorted(hist):
        w.writerow([s, hist[s]])
    return buf.getvalue()


def histogram_to_json(hist: Mapping[int, int]) -> str:
    return json.dumps({str(s): hist[s] for s in sorted(hist)})
