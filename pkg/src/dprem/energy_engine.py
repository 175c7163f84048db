"""Path energies, gap processes and the covariance structure of path tuples."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _parallel
from .environment import EnvField
from .errors import BudgetExceededError
from .kernels import active as _k
from .lattice_paths import DEFAULT_PATH_CAP, Path, PathTuple, check_budget

RANK_RTOL = 1e-8
DEFAULT_GMAX = 50.0


def path_energy(p: Path, env: EnvField) -> float:
    """N^{-1/2} times the field summed along the path, times 1..N in order."""
    sites = p.sites[1:]
    vals = env.values(np.arange(1, p.length + 1), sites)
    acc = 0.0
    for v in vals:
        acc += float(v)
    return acc * (1.0 / math.sqrt(p.length))


def all_energies(d: int, N: int, env: EnvField, workers: int = 1,
                 cap: int | None = DEFAULT_PATH_CAP) -> np.ndarray:
    """Energies of every path, indexed by PathId."""
    total = (2 * d) ** N
    check_budget(f"all_energies(d={d}, N={N})", total, cap)
    grid = env.grid(d, N)
    parts = _parallel.map_ranges(lambda a, b: _k.energies_range(grid, d, N, a, b), total, workers)
    return np.concatenate(parts)


def log_gap_scale(d: int, N: int, e_level: float) -> float:
    return 0.5 * e_level**2 + 0.5 * math.log(math.pi / 2.0) - N * math.log(2 * d)


@dataclass
class GapProcess:
    """Sorted scaled distances |energy - E_N| / delta_N, truncated at ``g_max``."""

    dim: int
    n: int
    e_level: float
    delta_n: float
    g_max: float
    total_paths: int
    gaps: np.ndarray
    path_ids: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {"d": self.dim, "n": self.n, "e_level": self.e_level, "delta_n": self.delta_n,
                "g_max": self.g_max, "total_paths": self.total_paths,
                "gaps": [float(g) for g in self.gaps]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj: dict) -> GapProcess:
        return cls(dim=int(obj["d"]), n=int(obj["n"]), e_level=float(obj["e_level"]),
                   delta_n=float(obj["delta_n"]), g_max=float(obj["g_max"]),
                   total_paths=int(obj["total_paths"]), gaps=np.asarray(obj["gaps"], dtype=np.float64))

    @classmethod
    def from_json(cls, text: str) -> GapProcess:
        return cls.from_dict(json.loads(text))


def all_gaps(d: int, N: int, env: EnvField, level: float, g_max: float = DEFAULT_GMAX,
             delta_n: float | None = None, workers: int = 1,
             cap: int | None = DEFAULT_PATH_CAP) -> GapProcess:
    """Gap process of one environment sample around the level ``E_N = level``.

    Energies are streamed per PathId range; each range keeps only gaps up to
    ``g_max`` and the merged result is ordered by (gap, PathId), so it does not
    depend on the worker count.
    """
    total = (2 * d) ** N
    check_budget(f"all_gaps(d={d}, N={N})", total, cap)
    if delta_n is None:
        delta_n = math.exp(log_gap_scale(d, N, level))
    grid = env.grid(d, N)
    inv = 1.0 / delta_n

    def work(a, b):
        g = np.abs(_k.energies_range(grid, d, N, a, b) - level) * inv
        keep = np.flatnonzero(g <= g_max)
        return g[keep], keep + a

    parts = _parallel.map_ranges(work, total, workers)
    gaps = np.concatenate([p[0] for p in parts])
    ids = np.concatenate([p[1] for p in parts])
    order = np.lexsort((ids, gaps))
    return GapProcess(dim=d, n=N, e_level=float(level), delta_n=float(delta_n), g_max=float(g_max),
                      total_paths=total, gaps=gaps[order], path_ids=ids[order])


@dataclass(frozen=True)
class CovMatrix:
    """Energy covariance of a tuple: ``counts / N`` with ``counts[i, i] = N``."""

    counts: np.ndarray
    N: int
    source: PathTuple | None = None

    @property
    def order(self) -> int:
        return self.counts.shape[0]

    @property
    def entries(self) -> np.ndarray:
        return self.counts / self.N


def _tuple_codes(t: PathTuple) -> np.ndarray:
    """Site rows for times 1..N, one row per path, packed to integers."""
    N = t.length
    W = 2 * N + 1
    wpow = W ** np.arange(t.dim, dtype=np.int64)
    return np.stack([(p.sites[1:] + N) @ wpow for p in t.paths])


def covariance_matrix(t: PathTuple) -> CovMatrix:
    codes = _tuple_codes(t)
    counts = (codes[:, None, :] == codes[None, :, :]).sum(axis=2).astype(np.int64)
    return CovMatrix(counts=counts, N=t.length, source=t)


@dataclass(frozen=True)
class PatternMatrix:
    """0/1 rows, one per coincidence block per time step (time-major)."""

    rows: np.ndarray
    step: np.ndarray
    N: int

    @property
    def l(self) -> int:  # noqa: E743
        return self.rows.shape[1]

    def gram(self) -> np.ndarray:
        """A^T A in integer arithmetic; equals N * B_N."""
        a = self.rows.astype(np.int64)
        return a.T @ a


def pattern_matrix(t: PathTuple) -> PatternMatrix:
    codes = _tuple_codes(t)
    l, N = codes.shape
    rows, steps = [], []
    for n in range(N):
        col = codes[:, n]
        seen: dict[int, list[int]] = {}
        for i in range(l):
            seen.setdefault(int(col[i]), []).append(i)
        # dict preserves insertion order, i.e. blocks ordered by smallest member
        for members in seen.values():
            r = np.zeros(l, dtype=np.int8)
            r[members] = 1
            rows.append(r)
            steps.append(n + 1)
    return PatternMatrix(rows=np.array(rows, dtype=np.int8), step=np.array(steps, dtype=np.int64), N=N)


def exact_rank(m) -> int:
    """Rank over the rationals of an integer (or Fraction) matrix."""
    a = [[Fraction(int(v)) if not isinstance(v, Fraction) else v for v in row] for row in np.asarray(m, dtype=object)]
    rows, cols = len(a), len(a[0]) if a else 0
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        for i in range(rows):
            if i != r and a[i][c] != 0:
                f = a[i][c] / a[r][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        r += 1
    return r


def exact_det(counts: np.ndarray, N: int) -> Fraction:
    a = [[Fraction(int(v), N) for v in row] for row in counts]
    n = len(a)
    det = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        for i in range(c + 1, n):
            f = a[i][c] / a[c][c]
            a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return det


def numeric_rank(b: np.ndarray, rtol: float = RANK_RTOL) -> int:
    sv = np.linalg.svd(b, compute_uv=False)
    return int((sv > rtol * sv[0]).sum()) if sv.size and sv[0] > 0 else 0


@dataclass(frozen=True)
class RankInfo:
    rank: int
    exact_rank: int
    det: float
    det_exact: Fraction
    basis: tuple[int, ...]
    degenerate: bool


def greedy_basis(b: np.ndarray, rtol: float = RANK_RTOL) -> tuple[int, ...]:
    """First indices whose energies are linearly independent, scanned in order."""
    basis: list[int] = []
    for i in range(b.shape[0]):
        trial = basis + [i]
        if numeric_rank(b[np.ix_(trial, trial)], rtol) == len(trial):
            basis = trial
    return tuple(basis)


def rank_info_from_counts(counts: np.ndarray, N: int, rtol: float = RANK_RTOL) -> RankInfo:
    b = counts / N
    r = numeric_rank(b, rtol)
    rx = exact_rank(counts)
    return RankInfo(rank=r, exact_rank=rx, det=float(np.linalg.det(b)), det_exact=exact_det(counts, N),
                    basis=greedy_basis(b, rtol), degenerate=rx < counts.shape[0])


def rank_analysis(t: PathTuple, rtol: float = RANK_RTOL) -> RankInfo:
    return rank_info_from_counts(covariance_matrix(t).counts, t.length, rtol)


def basis_distinct_steps(t: PathTuple, basis: tuple[int, ...]) -> list[int]:
    """Times m in 1..N at which the basis paths occupy pairwise distinct sites."""
    codes = _tuple_codes(t)[list(basis)]
    return [m + 1 for m in range(codes.shape[1]) if len(set(codes[:, m].tolist())) == len(basis)]


__all__ = [
    "BudgetExceededError", "CovMatrix", "GapProcess", "PatternMatrix", "RankInfo", "all_energies",
    "all_gaps", "basis_distinct_steps", "covariance_matrix", "exact_det", "exact_rank", "greedy_basis",
    "log_gap_scale", "numeric_rank", "path_energy", "pattern_matrix", "rank_analysis",
    "rank_info_from_counts",
]
