"""Independent reference implementations used to check the package.

Nothing here imports the code under test except for EnvField lookups, so
agreement is a real cross-check.
"""
import itertools
import math

import numpy as np
from scipy import integrate
from scipy.stats import norm


def step_vectors(d):
    """Step for each base-(2d) digit: digit k moves along axis k // 2, + when k is even."""
    out = []
    for k in range(2 * d):
        v = [0] * d
        v[k // 2] = 1 if k % 2 == 0 else -1
        out.append(tuple(v))
    return out


def brute_paths(d, N):
    """Site sequences of every path, in PathId order (first step most significant)."""
    steps = step_vectors(d)
    paths = []
    for digits in itertools.product(range(2 * d), repeat=N):
        pos = (0,) * d
        sites = [pos]
        for k in digits:
            pos = tuple(a + b for a, b in zip(pos, steps[k]))
            sites.append(pos)
        paths.append(sites)
    return paths


def brute_coincidences(s1, s2, include_origin=False):
    lo = 0 if include_origin else 1
    return sum(1 for a, b in zip(s1[lo:], s2[lo:]) if a == b)


def brute_pair_histogram(d, N):
    paths = brute_paths(d, N)
    h = {}
    for a in paths:
        for b in paths:
            s = brute_coincidences(a, b, include_origin=True)
            h[s] = h.get(s, 0) + 1
    return h


def brute_return_histogram(d, horizon):
    h = {}
    origin = (0,) * d
    for sites in brute_paths(d, horizon):
        s = sum(1 for x in sites if x == origin)
        h[s] = h.get(s, 0) + 1
    return h


def difference_walk_distribution(N):
    """d=1: law of #{m in 1..N : w1_m = w2_m} for two independent walks.

    The difference walk moves by -2, 0, +2 with probabilities 1/4, 1/2, 1/4.
    Returns probabilities indexed by the count.
    """
    P = np.zeros((2 * N + 1, N + 1))
    P[N, 0] = 1.0
    for _ in range(N):
        Q = 0.5 * P
        Q[1:] += 0.25 * P[:-1]
        Q[:-1] += 0.25 * P[1:]
        Q[N] = np.concatenate([[0.0], Q[N, :-1]])
        P = Q
    return P.sum(axis=0)


def gauss_box_2d(rho, h, center=0.0):
    """P(|X - c| < h, |Y - c| < h) for a standard bivariate normal pair, by dblquad."""
    det = 1.0 - rho * rho

    def f(v, u):
        x, y = center + h * u, center + h * v
        return math.exp(-(x * x - 2 * rho * x * y + y * y) / (2 * det)) / (2 * math.pi * math.sqrt(det)) * h * h

    return integrate.dblquad(f, -1, 1, -1, 1, epsabs=0, epsrel=1e-12)[0]


def pair_sum_d1(N, b1=1.0, b2=1.0):
    """Sum of pair box probabilities over ordered distinct pairs at level 0, d=1."""
    p = difference_walk_distribution(N) * 4.0**N
    p[N] -= 2.0**N  # identical pairs are the only ones coinciding at every step
    dn = math.sqrt(math.pi / 2) / 2**N
    return math.fsum(p[k] * gauss_box_2d_rect(k / N, b1 * dn, b2 * dn) for k in range(N) if p[k] > 0.5)


def gauss_box_2d_rect(rho, h1, h2):
    det = 1.0 - rho * rho

    def f(v, u):
        x, y = h1 * u, h2 * v
        return math.exp(-(x * x - 2 * rho * x * y + y * y) / (2 * det)) / (2 * math.pi * math.sqrt(det)) * h1 * h2

    return integrate.dblquad(f, -1, 1, -1, 1, epsabs=0, epsrel=1e-12)[0]


def direct_energy(env, sites):
    """N^{-1/2} times the field summed along the path via scalar lookups."""
    N = len(sites) - 1
    return math.fsum(env.value_at(n, sites[n]) for n in range(1, N + 1)) / math.sqrt(N)


def family_z(comparisons, level=0.0027):
    """Two-sided z threshold keeping the family-wise error of many comparisons at ``level``.

    ``level`` = 0.0027 is the rate of a single 3 sigma comparison.
    """
    return float(norm.isf(level / (2 * comparisons)))
