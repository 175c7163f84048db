"""Numba kernels. Same contracts as the numpy ones, written as scalar loops."""
import math

import numba as nb
import numpy as np

from .hashing import (
    C_FIELD,
    C_WALK,
    GOLDEN,
    M1,
    M2,
    STREAM_AUX,
    STREAM_MAIN,
    STREAM_WALK,
)

_jit = nb.njit(cache=True, nogil=True)

_U_GOLDEN = np.uint64(GOLDEN)
_U_M1 = np.uint64(M1)
_U_M2 = np.uint64(M2)
_U_CFIELD = np.uint64(C_FIELD)
_U_CWALK = np.uint64(C_WALK)
_U_MAIN = np.uint64(STREAM_MAIN)
_U_AUX = np.uint64(STREAM_AUX)
_U_WALK = np.uint64(STREAM_WALK)
_TWO_M53 = 2.0**-53
_TWO_PI = 2.0 * math.pi
_SQRT3 = math.sqrt(3.0)


@_jit
def _mix(z):
    z = z ^ (z >> np.uint64(30))
    z = z * _U_M1
    z = z ^ (z >> np.uint64(27))
    z = z * _U_M2
    return z ^ (z >> np.uint64(31))


@_jit
def _absorb(h, w):
    return _mix((h ^ w) + _U_GOLDEN)


@_jit
def _to_unit(h):
    return (np.float64(h >> np.uint64(11)) + 0.5) * _TWO_M53


@_jit
def _site_hash(seed_u, sample_u, n, x, d, stream):
    h = _mix(seed_u ^ _U_CFIELD)
    h = _absorb(h, sample_u)
    h = _absorb(h, np.uint64(n))
    h = _absorb(h, np.uint64(d))
    for j in range(d):
        h = _absorb(h, np.uint64(x[j]))
    return _absorb(h, stream)


@_jit
def _value(seed_u, sample_u, dist_code, n, x, d):
    u1 = _to_unit(_site_hash(seed_u, sample_u, n, x, d, _U_MAIN))
    if dist_code == 0:
        u2 = _to_unit(_site_hash(seed_u, sample_u, n, x, d, _U_AUX))
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)
    if dist_code == 1:
        return _SQRT3 * (2.0 * u1 - 1.0)
    return -math.log(u1) - 1.0


@_jit
def _field_values(seed_u, sample_u, dist_code, n, x):
    k, d = x.shape
    out = np.empty(k, dtype=np.float64)
    for i in range(k):
        out[i] = _value(seed_u, sample_u, dist_code, n[i], x[i], d)
    return out


@_jit
def _field_grid(seed_u, sample_u, dist_code, d, N):
    W = 2 * N + 1
    ncell = W**d
    out = np.empty(N * ncell, dtype=np.float64)
    x = np.empty(d, dtype=np.int64)
    for c in range(ncell):
        rem = c
        for j in range(d):
            x[j] = rem % W - N
            rem //= W
        for n in range(1, N + 1):
            out[(n - 1) * ncell + c] = _value(seed_u, sample_u, dist_code, n, x, d)
    return out


def field_values(seed, sample, dist_code, n, x):
    n = np.ascontiguousarray(n, dtype=np.int64).ravel()
    x = np.ascontiguousarray(x, dtype=np.int64).reshape(n.size, -1)
    return _field_values(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF),
                         np.uint64(int(sample) & 0xFFFFFFFFFFFFFFFF), dist_code, n, x)


def field_grid(seed, sample, dist_code, d, N):
    return _field_grid(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF),
                       np.uint64(int(sample) & 0xFFFFFFFFFFFFFFFF), dist_code, d, N)


@_jit
def _energies_range(grid, d, N, start, stop):
    # depth-first walk of the step tree; consecutive ids share a prefix, so
    # only levels below the last carried digit are recomputed
    W = 2 * N + 1
    q = 2 * d
    ncell = W**d
    wpow = np.empty(d, dtype=np.int64)
    base = 0
    p = 1
    for j in range(d):
        wpow[j] = p
        base += N * p
        p *= W
    digits = np.empty(N, dtype=np.int64)
    rem = start
    for k in range(N - 1, -1, -1):
        digits[k] = rem % q
        rem //= q
    site = np.empty(N + 1, dtype=np.int64)
    prefix = np.empty(N + 1, dtype=np.float64)
    site[0] = base
    prefix[0] = 0.0
    scale = 1.0 / math.sqrt(N)
    out = np.empty(stop - start, dtype=np.float64)
    level = 0
    for i in range(stop - start):
        for k in range(level, N):
            dig = digits[k]
            s = site[k] + (1 - 2 * (dig & 1)) * wpow[dig >> 1]
            site[k + 1] = s
            prefix[k + 1] = prefix[k] + grid[k * ncell + s]
        out[i] = prefix[N] * scale
        k = N - 1
        while k >= 0:
            digits[k] += 1
            if digits[k] < q:
                break
            digits[k] = 0
            k -= 1
        level = max(k, 0)
    return out


def energies_range(grid, d, N, start, stop):
    return _energies_range(grid, d, N, start, stop)


@_jit
def _coincidence_matrix(a, b):
    P, L = a.shape
    Q = b.shape[0]
    out = np.empty((P, Q), dtype=np.int32)
    for i in range(P):
        for j in range(Q):
            s = 0
            for m in range(L):
                if a[i, m] == b[j, m]:
                    s += 1
            out[i, j] = s
    return out


def coincidence_matrix(codes_a, codes_b):
    return _coincidence_matrix(np.ascontiguousarray(codes_a, dtype=np.int64),
                               np.ascontiguousarray(codes_b, dtype=np.int64))


@_jit
def _coincidence_histogram(c):
    P, L = c.shape
    hist = np.zeros(L + 1, dtype=np.int64)
    for i in range(P):
        hist[L] += 1
        for j in range(i + 1, P):
            s = 0
            for m in range(L):
                if c[i, m] == c[j, m]:
                    s += 1
            hist[s] += 2
    return hist


def coincidence_histogram(codes):
    return _coincidence_histogram(np.ascontiguousarray(codes, dtype=np.int64))


@_jit
def _walk_returns(seed_u, d, N, horizon, start, stop):
    n = stop - start
    visits = np.ones(n, dtype=np.int64)
    first = np.full(n, -1, dtype=np.int64)
    pos = np.zeros(d, dtype=np.int64)
    q = np.uint64(2 * d)
    h0 = _mix(seed_u ^ _U_CWALK)
    for i in range(n):
        hs = _absorb(h0, np.uint64(start + i))
        for j in range(d):
            pos[j] = 0
        for m in range(1, horizon + 1):
            if m > N and first[i] >= 0:
                break
            dig = np.int64(_absorb(_absorb(hs, np.uint64(m)), _U_WALK) % q)
            pos[dig >> 1] += 1 - 2 * (dig & 1)
            at0 = True
            for j in range(d):
                if pos[j] != 0:
                    at0 = False
                    break
            if at0:
                if m <= N:
                    visits[i] += 1
                if first[i] < 0:
                    first[i] = m
    return visits, first


def walk_returns(seed, d, N, horizon, start, stop):
    return _walk_returns(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF), d, N, horizon, start, stop)


@_jit
def _visit_histogram(d, horizon, start, stop):
    # same prefix-reuse walk as _energies_range, carrying visit counts instead of sums
    q = 2 * d
    counts = np.zeros(horizon + 2, dtype=np.int64)
    digits = np.empty(horizon, dtype=np.int64)
    rem = start
    for k in range(horizon - 1, -1, -1):
        digits[k] = rem % q
        rem //= q
    pos = np.zeros((horizon + 1, d), dtype=np.int64)
    zeros = np.zeros(horizon + 1, dtype=np.int64)
    off = np.zeros(horizon + 1, dtype=np.int64)  # number of nonzero coordinates
    zeros[0] = 1
    level = 0
    for _ in range(stop - start):
        for k in range(level, horizon):
            dig = digits[k]
            ax = dig >> 1
            for j in range(d):
                pos[k + 1, j] = pos[k, j]
            before = pos[k, ax] != 0
            pos[k + 1, ax] += 1 - 2 * (dig & 1)
            after = pos[k + 1, ax] != 0
            off[k + 1] = off[k] + np.int64(after) - np.int64(before)
            zeros[k + 1] = zeros[k] + (1 if off[k + 1] == 0 else 0)
        counts[zeros[horizon]] += 1
        k = horizon - 1
        while k >= 0:
            digits[k] += 1
            if digits[k] < q:
                break
            digits[k] = 0
            k -= 1
        level = max(k, 0)
    return counts


def visit_histogram(d, horizon, start, stop):
    return _visit_histogram(d, horizon, start, stop)
