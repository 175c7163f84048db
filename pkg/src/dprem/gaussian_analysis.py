"""Gaussian box probabilities, the tuple-sum criterion, and characteristic functions.

The threshold exponent of the decorrelated tuple class is called ``eta_class``
here so it does not collide with the field values eta(n, x).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .energy_engine import (
    CovMatrix,
    PatternMatrix,
    covariance_matrix,
    log_gap_scale,
    numeric_rank,
    pattern_matrix,
    rank_info_from_counts,
)
from .environment import DistributionSpec, char_fn
from .errors import SingularMatrixError, TailBoundError
from .lattice_paths import PathTuple, check_budget, site_codes
from .kernels import active as _k

TINY_BOX = 1e-3
QUAD_RTOL = 1e-10
MAX_QUAD_DIM = 4
DEFAULT_TUPLE_CAP = 2**24
DEFAULT_ETA_CLASS = 0.4
_LOG_TINY = math.log(np.finfo(float).tiny)


@dataclass(frozen=True)
class LevelSpec:
    c: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")

    def e_level(self, N: int) -> float:
        return self.c * N**self.alpha

    def regime(self, d: int, dist: str = "gaussian") -> str:
        """Which theorem regime (if any) this level falls in."""
        if self.alpha == 0:
            return "th0" if dist != "gaussian" else ("th1" if d == 1 else "th2")
        if dist != "gaussian":
            return "out-of-theorem"
        if d == 1:
            return "th1" if self.alpha < 0.25 else "out-of-theorem"
        return "th2" if self.alpha < 0.5 else "out-of-theorem"


@dataclass(frozen=True)
class WindowSpec:
    b: tuple[float, ...]
    delta_n: float

    @classmethod
    def for_level(cls, b, d: int, N: int, level: LevelSpec) -> WindowSpec:
        return cls(tuple(float(x) for x in b), delta_n(d, N, level))

    @property
    def halfwidths(self) -> np.ndarray:
        return np.asarray(self.b, dtype=np.float64) * self.delta_n


def delta_n(d: int, N: int, level: LevelSpec) -> float:
    """Gap scale sqrt(pi/2) exp(E_N^2 / 2) / (2d)^N, evaluated in log space."""
    lg = log_gap_scale(d, N, level.e_level(N))
    if lg < _LOG_TINY:
        raise OverflowError(f"delta_N underflows (log = {lg:.1f})")
    if lg > 700:
        raise OverflowError(f"delta_N overflows (log = {lg:.1f})")
    return math.exp(lg)


@dataclass(frozen=True)
class TupleClass:
    eta_class: float
    convention: str
    threshold: float
    inside: bool


def class_threshold(N: int, eta_class: float) -> float:
    return N ** (eta_class - 0.5)


def classify(cov: CovMatrix, d: int, eta_class: float = DEFAULT_ETA_CLASS) -> TupleClass:
    """Inside iff every off-diagonal covariance is at most N^(eta_class - 1/2).

    For d >= 2 the same threshold reads N^(beta - 1) with beta = eta_class + 1/2.
    """
    thr = class_threshold(cov.N, eta_class)
    b = cov.entries
    off = b[~np.eye(b.shape[0], dtype=bool)]
    inside = bool(off.size == 0 or off.max() <= thr * (1 + 1e-12))
    return TupleClass(eta_class, "R" if d == 1 else "K", thr, inside)


# --------------------------------------------------------------------------
# multivariate normal boxes


@dataclass(frozen=True)
class BoxResult:
    value: float
    method: str
    correction: float = 0.0


def _as_cov(B) -> np.ndarray:
    return B.entries if isinstance(B, CovMatrix) else np.asarray(B, dtype=np.float64)


def _box_1d(m, var, lo, hi):
    s = math.sqrt(var)
    a, b = (lo - m) / s, (hi - m) / s
    # difference on the tail side that keeps relative precision
    if a > 0:
        return special.ndtr(-a) - special.ndtr(-b)
    return special.ndtr(b) - special.ndtr(a)


def _box_quad(mean, cov, lo, hi):
    if mean.size == 1:
        return _box_1d(mean[0], cov[0, 0], lo[0], hi[0])
    c11 = cov[0, 0]
    gain = cov[1:, 0] / c11
    cond = cov[1:, 1:] - np.outer(gain, cov[0, 1:])
    s1 = math.sqrt(c11)

    def inner(z):
        dens = math.exp(-0.5 * ((z - mean[0]) / s1) ** 2) / (s1 * math.sqrt(2 * math.pi))
        return dens * _box_quad(mean[1:] + gain * (z - mean[0]), cond, lo[1:], hi[1:])

    val, _ = integrate.quad(inner, lo[0], hi[0], epsabs=0.0, epsrel=QUAD_RTOL, limit=200)
    return val


def box_probability_detail(B, center, halfwidths) -> BoxResult:
    """P(|Z_i - center_i| < halfwidth_i for all i), Z ~ N(0, B)."""
    b = _as_cov(B)
    l = b.shape[0]
    c = np.broadcast_to(np.asarray(center, dtype=np.float64), (l,)).copy()
    h = np.broadcast_to(np.asarray(halfwidths, dtype=np.float64), (l,)).copy()
    if (h < 0).any():
        raise ValueError("halfwidths must be >= 0")
    if (h == 0).any():
        return BoxResult(0.0, "empty")
    if numeric_rank(b) < l:
        raise SingularMatrixError("covariance is singular; reduce to the basis tuple first")
    if l == 1:
        return BoxResult(float(_box_1d(0.0, b[0, 0], c[0] - h[0], c[0] + h[0])), "closed-form")
    q = np.linalg.inv(b)
    if (h < TINY_BOX).all():
        _, logdet = np.linalg.slogdet(b)
        logdens = -0.5 * c @ q @ c - 0.5 * l * math.log(2 * math.pi) - 0.5 * logdet
        vol = float(np.prod(2 * h))
        g = q @ c
        corr = float(np.sum(h**2 * (g**2 - np.diag(q))) / 6.0)
        return BoxResult(math.exp(logdens) * vol, "midpoint", corr)
    if l > MAX_QUAD_DIM:
        raise ValueError(f"adaptive quadrature supports at most {MAX_QUAD_DIM} dimensions")
    return BoxResult(float(_box_quad(np.zeros(l), b, c - h, c + h)), "quadrature")


def mvn_box_probability(B, center, halfwidths) -> float:
    return box_probability_detail(B, center, halfwidths).value


def box_density_bound(B, halfwidths) -> float:
    """Box volume times the peak density: prod(2 h_i) / ((2 pi)^(l/2) sqrt(det B))."""
    b = _as_cov(B)
    h = np.asarray(halfwidths, dtype=np.float64)
    l = b.shape[0]
    return float(np.prod(2 * h) / ((2 * math.pi) ** (l / 2) * math.sqrt(np.linalg.det(b))))


def es1_bounds(B, e_level: float, halfwidths) -> tuple[float, float]:
    """Ratio of the box probability to its decorrelated approximation, and a bound on |log ratio|.

    The approximation is prod(2 h_i) / sqrt(2 pi)^l * exp(-l E^2 / 2). The
    bound comes from bracketing the Gaussian exponent over the box.
    """
    b = _as_cov(B)
    h = np.asarray(halfwidths, dtype=np.float64)
    l = b.shape[0]
    q = np.linalg.inv(b)
    ones = np.ones(l)
    p = mvn_box_probability(b, e_level * ones, h)
    approx = float(np.prod(2 * h)) / (2 * math.pi) ** (l / 2) * math.exp(-0.5 * l * e_level**2)
    _, logdet = np.linalg.slogdet(b)
    spread = (e_level**2 * abs(ones @ q @ ones - l) + 2 * abs(e_level) * np.abs(q @ ones).sum() * h.max()
              + np.linalg.norm(q, 2) * float(h @ h))
    return p / approx, 0.5 * abs(logdet) + 0.5 * spread


# --------------------------------------------------------------------------
# tuple sums


@dataclass
class ZetResult:
    n: int
    l: int
    d: int
    sum: float
    target: float
    inside_share: float
    inside_sum: float
    eta_class: float
    rank_breakdown: dict[int, dict[str, float]] = field(default_factory=dict)
    tuples: int = 0
    patterns: int = 0

    def to_dict(self) -> dict:
        return {"n": self.n, "l": self.l, "d": self.d, "sum": self.sum, "target": self.target,
                "inside_share": self.inside_share, "eta_class": self.eta_class,
                "rank_breakdown": {str(k): v for k, v in sorted(self.rank_breakdown.items())},
                "tuples": self.tuples, "patterns": self.patterns}


def _pattern_counts(d: int, N: int, l: int) -> dict[tuple[int, ...], int]:
    """Ordered distinct l-tuples bucketed by their upper-triangle coincidence counts."""
    codes = site_codes(d, N, include_origin=False)
    S = _k.coincidence_matrix(codes, codes).astype(np.int64)
    P = S.shape[0]
    if l == 1:
        return {(): P}
    if l == 2:
        off = S[~np.eye(P, dtype=bool)]
        bc = np.bincount(off, minlength=N + 1)
        return {(s,): int(c) for s, c in enumerate(bc) if c}
    pairs = [(a, b) for a in range(l) for b in range(a + 1, l)]
    base = N + 1
    out: dict[tuple[int, ...], int] = {}
    rest = np.stack(np.meshgrid(*[np.arange(P)] * (l - 1), indexing="ij"), axis=-1).reshape(-1, l - 1)
    for i0 in range(P):
        idx = np.column_stack([np.full(rest.shape[0], i0), rest])
        distinct = np.ones(idx.shape[0], dtype=bool)
        for a, b in pairs:
            distinct &= idx[:, a] != idx[:, b]
        idx = idx[distinct]
        key = np.zeros(idx.shape[0], dtype=np.int64)
        for a, b in pairs:
            key = key * base + S[idx[:, a], idx[:, b]]
        u, cnt = np.unique(key, return_counts=True)
        for k, c in zip(u.tolist(), cnt.tolist()):
            digits = []
            for _ in pairs:
                k, r = divmod(k, base)
                digits.append(r)
            pat = tuple(reversed(digits))
            out[pat] = out.get(pat, 0) + c
    return out


def _counts_from_pattern(pat: tuple[int, ...], N: int, l: int) -> np.ndarray:
    m = np.full((l, l), N, dtype=np.int64)
    k = 0
    for a in range(l):
        for b in range(a + 1, l):
            m[a, b] = m[b, a] = pat[k]
            k += 1
    return m


def zet_sum(d: int, N: int, l: int, windows: WindowSpec, level: LevelSpec,
            eta_class: float = DEFAULT_ETA_CLASS, cap: int | None = DEFAULT_TUPLE_CAP) -> ZetResult:
    """Sum of joint Gaussian box probabilities over ordered tuples of distinct paths.

    Box probabilities depend on a tuple only through its coincidence counts,
    so tuples are grouped by that pattern and each distinct covariance is
    integrated once. Degenerate tuples contribute the probability of their
    greedy basis sub-tuple (an upper bound).
    """
    if len(windows.b) != l:
        raise ValueError("need one window half-width per tuple member")
    check_budget(f"zet_sum(d={d}, N={N}, l={l})", (2 * d) ** (N * l), cap)
    e = level.e_level(N)
    h = windows.halfwidths
    thr = class_threshold(N, eta_class)
    terms, inside_terms = [], []
    breakdown: dict[int, dict[str, float]] = {}
    total_tuples = 0
    patterns = _pattern_counts(d, N, l)
    for pat in sorted(patterns):
        count = patterns[pat]
        total_tuples += count
        counts = _counts_from_pattern(pat, N, l)
        info = rank_info_from_counts(counts, N)
        sub = list(info.basis) if info.degenerate else list(range(l))
        p = mvn_box_probability(counts[np.ix_(sub, sub)] / N, np.full(len(sub), e), h[sub])
        term = count * p
        terms.append(term)
        if not pat or max(pat) / N <= thr * (1 + 1e-12):
            inside_terms.append(term)
        slot = breakdown.setdefault(info.exact_rank, {"tuples": 0, "sum": 0.0})
        slot["tuples"] += count
        slot["sum"] = math.fsum([slot["sum"], term])
    total = math.fsum(terms)
    inside = math.fsum(inside_terms)
    return ZetResult(n=N, l=l, d=d, sum=total, target=float(np.prod(windows.b)),
                     inside_share=inside / total if total > 0 else 0.0, inside_sum=inside,
                     eta_class=eta_class, rank_breakdown=breakdown, tuples=total_tuples,
                     patterns=len(patterns))


# --------------------------------------------------------------------------
# characteristic functions


def joint_char_fn(pm: PatternMatrix, dist: DistributionSpec, tvec) -> np.ndarray | complex:
    """prod_j phi(N^{-1/2} (A t)_j); ``tvec`` of shape (l,) or (k, l)."""
    t = np.asarray(tvec, dtype=np.float64)
    single = t.ndim == 1
    t = np.atleast_2d(t)
    args = (t @ pm.rows.T.astype(np.float64)) / math.sqrt(pm.N)
    vals = np.prod(np.atleast_1d(char_fn(dist, args)).reshape(args.shape), axis=1)
    return complex(vals[0]) if single else vals


def gaussian_cf(cov: CovMatrix, tvec) -> np.ndarray:
    t = np.atleast_2d(np.asarray(tvec, dtype=np.float64))
    return np.exp(-0.5 * np.einsum("ki,ij,kj->k", t, cov.entries, t))


def direction_grid(l: int, count: int = 64, seed: int = 20240613) -> np.ndarray:
    """Unit vectors: coordinate axes, the all-ones diagonals, then seeded random directions."""
    dirs = [np.eye(l)[i] * s for i in range(l) for s in (1, -1)]
    dirs += [np.ones(l) / math.sqrt(l), -np.ones(l) / math.sqrt(l)]
    if l == 2:
        ang = np.linspace(0, 2 * math.pi, count, endpoint=False)
        dirs += list(np.column_stack([np.cos(ang), np.sin(ang)]))
    else:
        g = np.random.default_rng(seed).standard_normal((count, l))
        dirs += list(g / np.linalg.norm(g, axis=1, keepdims=True))
    return np.array(dirs)


@dataclass
class BerryEsseenReport:
    n: int
    c_hat: float
    zeta_hat: float
    max_abs_mid: float
    gaussian_gap: float
    eps: float
    delta: float


def berry_esseen_check(t: PathTuple, dist: DistributionSpec, t_grid=None, eps: float = 1.0,
                       delta: float = 1.0, radii: int = 40) -> BerryEsseenReport:
    """Empirical constants of the near-gaussian and decay bounds on a grid of t.

    ``c_hat`` is the largest |f_N - g| / (|t|^3 N^{-1/2} g) over |t| <= eps N^{1/6};
    ``zeta_hat`` the smallest -log|f_N| / |t|^2 over 0 < |t| < delta sqrt(N);
    ``max_abs_mid`` the largest |f_N| on eps N^{1/6} <= |t| < delta sqrt(N).
    """
    N = t.length
    pm = pattern_matrix(t)
    cov = covariance_matrix(t)
    if t_grid is None:
        dirs = direction_grid(t.l)
        rmax = delta * math.sqrt(N)
        rs = np.linspace(rmax / radii, rmax * (1 - 1e-9), radii)
        rs = np.union1d(rs, np.linspace(eps * N ** (1 / 6) / radii, eps * N ** (1 / 6), radii))
        t_grid = (rs[:, None, None] * dirs[None, :, :]).reshape(-1, t.l)
    tg = np.asarray(t_grid, dtype=np.float64)
    r = np.linalg.norm(tg, axis=1)
    f = joint_char_fn(pm, dist, tg)
    g = gaussian_cf(cov, tg)
    gap = np.abs(f - g)
    near = (r > 0) & (r <= eps * N ** (1 / 6))
    c_hat = float(np.max(gap[near] / (r[near] ** 3 / math.sqrt(N) * g[near]))) if near.any() else 0.0
    body = (r > 0) & (r < delta * math.sqrt(N))
    with np.errstate(divide="ignore"):
        z = -np.log(np.abs(f[body])) / r[body] ** 2
    mid = body & (r >= eps * N ** (1 / 6))
    return BerryEsseenReport(n=N, c_hat=c_hat, zeta_hat=float(np.min(z)) if z.size else math.inf,
                             max_abs_mid=float(np.max(np.abs(f[mid]))) if mid.any() else 0.0,
                             gaussian_gap=float(np.max(gap)), eps=eps, delta=delta)


_CF_DECAY = {"uniform": 1.0 / math.sqrt(3.0), "cexp": 1.0}


def _tail_bound(dist: DistributionSpec, N: int, T: float) -> float:
    """Upper bound on (2/pi) * int_T^inf |f_N(t)| / t dt."""
    if dist.kind == "gaussian":
        return (2 / math.pi) * math.exp(-0.5 * T * T) / (T * T)
    C = _CF_DECAY[dist.kind] * math.sqrt(N)
    if T <= C:
        return math.inf
    return (2 / math.pi) * (C / T) ** N / N


def fourier_box_probability_1d(dist: DistributionSpec, c: float, halfwidth: float, N: int,
                               rel_tail: float = 1e-3, abs_tail: float = 1e-12,
                               t_max: float = 500.0) -> float:
    """P(|energy - c| < halfwidth) for one path, by inverting f_N(t) = phi(t / sqrt(N))^N.

    Uses P = (2/pi) int_0^T Re[f_N(t) e^{-itc}] sin(t h) / t dt, with T chosen so
    the bound on the discarded tail is below ``rel_tail`` times the result and
    below ``abs_tail``.
    """
    if halfwidth <= 0:
        return 0.0
    guess = float(_box_1d(0.0, 1.0, c - halfwidth, c + halfwidth))

    def integrand(t):
        if t == 0.0:
            return halfwidth * (2 / math.pi)
        f = char_fn(dist, t / math.sqrt(N)) ** N
        return (f * complex(math.cos(t * c), -math.sin(t * c))).real * math.sin(t * halfwidth) / t * (2 / math.pi)

    target = min(rel_tail * guess, abs_tail)
    for _ in range(4):
        T = _solve_cutoff(dist, N, target, t_max)
        step = 1.0
        edges = np.arange(0.0, T, step).tolist() + [T]
        val = math.fsum(integrate.quad(integrand, a, b, epsabs=1e-14, epsrel=1e-10, limit=200)[0]
                        for a, b in zip(edges[:-1], edges[1:]))
        if _tail_bound(dist, N, T) <= min(rel_tail * abs(val), abs_tail):
            return val
        target = min(rel_tail * abs(val), abs_tail) * 0.5
    raise TailBoundError("tail bound did not converge")


def _solve_cutoff(dist: DistributionSpec, N: int, target: float, t_max: float) -> float:
    lo, hi = 1e-3, t_max
    if _tail_bound(dist, N, hi) > target:
        raise TailBoundError(f"N={N} too small: tail bound at T={t_max} exceeds {target:.3g}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _tail_bound(dist, N, mid) > target:
            lo = mid
        else:
            hi = mid
    return hi
