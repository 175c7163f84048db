"""Pure-numpy kernels. Vectorized over paths or samples, loop over time."""
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

_U64 = np.uint64
_SH30, _SH27, _SH31, _SH11 = _U64(30), _U64(27), _U64(31), _U64(11)
_M1, _M2, _GOLDEN = _U64(M1), _U64(M2), _U64(GOLDEN)
_TWO_M53 = 2.0**-53


def _mix(z):
    z = z ^ (z >> _SH30)
    z = z * _M1
    z = z ^ (z >> _SH27)
    z = z * _M2
    return z ^ (z >> _SH31)


def _absorb(h, w):
    return _mix((h ^ w) + _GOLDEN)


def _as_u64(a):
    return np.asarray(a, dtype=np.int64).view(np.uint64)


def _seed_state(seed, domain, size):
    s = np.full(size, int(seed) & 0xFFFFFFFFFFFFFFFF, dtype=np.uint64)
    return _mix(s ^ _U64(domain))


def _to_unit(h):
    return ((h >> _SH11).astype(np.float64) + 0.5) * _TWO_M53


def field_hash(seed, sample, n, x, stream):
    """64-bit hash of ``(seed, sample, n, d, x_1..x_d, stream)`` for arrays of sites."""
    n = np.asarray(n, dtype=np.int64)
    x = np.asarray(x, dtype=np.int64).reshape(n.size, -1)
    d = x.shape[1]
    with np.errstate(over="ignore"):
        h = _seed_state(seed, C_FIELD, n.size)
        h = _absorb(h, _U64(int(sample) & 0xFFFFFFFFFFFFFFFF))
        h = _absorb(h, _as_u64(n))
        h = _absorb(h, _U64(d))
        for j in range(d):
            h = _absorb(h, _as_u64(x[:, j]))
        h = _absorb(h, _U64(stream))
    return h


def transform(u1, u2, dist_code):
    if dist_code == 0:
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
    if dist_code == 1:
        return np.sqrt(3.0) * (2.0 * u1 - 1.0)
    return -np.log(u1) - 1.0


def field_values(seed, sample, dist_code, n, x):
    u1 = _to_unit(field_hash(seed, sample, n, x, STREAM_MAIN))
    u2 = _to_unit(field_hash(seed, sample, n, x, STREAM_AUX)) if dist_code == 0 else None
    return transform(u1, u2, dist_code)


def field_grid(seed, sample, dist_code, d, N):
    """Field on times 1..N and the cube [-N, N]^d, flattened time-major.

    Spatial index is sum_j (x_j + N) * W**j with W = 2N + 1.
    """
    W = 2 * N + 1
    ncell = W**d
    flat = np.arange(ncell, dtype=np.int64)
    coords = np.empty((ncell, d), dtype=np.int64)
    rem = flat.copy()
    for j in range(d):
        coords[:, j] = rem % W - N
        rem //= W
    n = np.repeat(np.arange(1, N + 1, dtype=np.int64), ncell)
    x = np.tile(coords, (N, 1))
    return field_values(seed, sample, dist_code, n, x)


def energies_range(grid, d, N, start, stop):
    """Energies of PathIds in [start, stop), summed over time in order 1..N."""
    W = 2 * N + 1
    q = 2 * d
    ncell = W**d
    wpow = W ** np.arange(d, dtype=np.int64)
    ids = np.arange(start, stop, dtype=np.int64)
    site = np.full(ids.size, N * int(wpow.sum()), dtype=np.int64)
    acc = np.zeros(ids.size, dtype=np.float64)
    for k in range(N):
        dig = (ids // q ** (N - 1 - k)) % q
        sgn = 1 - 2 * (dig & 1)
        site += sgn * wpow[dig >> 1]
        acc += grid[k * ncell + site]
    return acc * (1.0 / np.sqrt(N))


def coincidence_matrix(codes_a, codes_b):
    """Entry (i, j) counts columns where codes_a[i] and codes_b[j] agree."""
    codes_a = np.ascontiguousarray(codes_a)
    codes_b = np.ascontiguousarray(codes_b)
    out = np.empty((codes_a.shape[0], codes_b.shape[0]), dtype=np.int32)
    chunk = max(1, (1 << 22) // max(1, codes_b.size))
    for i0 in range(0, codes_a.shape[0], chunk):
        blk = codes_a[i0:i0 + chunk]
        out[i0:i0 + chunk] = (blk[:, None, :] == codes_b[None, :, :]).sum(axis=2)
    return out


def coincidence_histogram(codes):
    """Histogram over all ordered pairs (equal pairs included) of agreeing columns."""
    codes = np.ascontiguousarray(codes)
    L = codes.shape[1]
    hist = np.zeros(L + 1, dtype=np.int64)
    chunk = max(1, (1 << 22) // max(1, codes.size))
    for i0 in range(0, codes.shape[0], chunk):
        blk = codes[i0:i0 + chunk]
        s = (blk[:, None, :] == codes[None, :, :]).sum(axis=2)
        hist += np.bincount(s.ravel(), minlength=L + 1)
    return hist


def walk_steps(seed, samples, m):
    with np.errstate(over="ignore"):
        h = _seed_state(seed, C_WALK, samples.size)
        h = _absorb(h, samples.view(np.uint64))
        h = _absorb(h, _U64(m))
        h = _absorb(h, _U64(STREAM_WALK))
    return h


def walk_returns(seed, d, N, horizon, start, stop):
    """Visits to the origin in [0, N] and first return time (-1 if none by horizon)."""
    samples = np.arange(start, stop, dtype=np.int64)
    pos = np.zeros((samples.size, d), dtype=np.int64)
    visits = np.ones(samples.size, dtype=np.int64)
    first = np.full(samples.size, -1, dtype=np.int64)
    q = _U64(2 * d)
    live = np.arange(samples.size)
    for m in range(1, horizon + 1):
        if m > N:
            # past the visit window only walks without a return still matter
            live = live[first[live] < 0]
            if live.size == 0:
                break
        dig = (walk_steps(seed, samples[live], m) % q).astype(np.int64)
        pos[live, dig >> 1] += 1 - 2 * (dig & 1)
        at0 = ~pos[live].any(axis=1)
        if m <= N:
            visits[live] += at0
        hit = live[at0 & (first[live] < 0)]
        first[hit] = m
    return visits, first


def visit_histogram(d, horizon, start, stop, chunk=1 << 18):
    """Walks with PathId in [start, stop) bucketed by visits to the origin at times 0..horizon."""
    q = 2 * d
    W = 2 * horizon + 1
    wpow = W ** np.arange(d, dtype=np.int64)
    origin = horizon * int(wpow.sum())
    counts = np.zeros(horizon + 2, dtype=np.int64)
    for a in range(start, stop, chunk):
        ids = np.arange(a, min(stop, a + chunk), dtype=np.int64)
        code = np.full(ids.size, origin, dtype=np.int64)
        visits = np.ones(ids.size, dtype=np.int64)
        for k in range(horizon):
            dig = (ids // q ** (horizon - 1 - k)) % q
            code += (1 - 2 * (dig & 1)) * wpow[dig >> 1]
            visits += code == origin
        counts += np.bincount(visits, minlength=horizon + 2)
    return counts
