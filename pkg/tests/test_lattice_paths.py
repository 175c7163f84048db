import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dprem import lattice_paths as lp
from dprem.errors import BudgetExceededError

from oracles import brute_pair_histogram, brute_paths, brute_return_histogram, difference_walk_distribution


def test_enumerate_base_cases():
    paths = list(lp.enumerate_paths(1, 1))
    assert [p.steps for p in paths] == [(1,), (-1,)]
    sites = [tuple(p.sites[:, 0]) for p in lp.enumerate_paths(1, 2)]
    assert sites == [(0, 1, 2), (0, 1, 0), (0, -1, 0), (0, -1, -2)]
    assert sum(1 for _ in lp.enumerate_paths(2, 3)) == 64


@pytest.mark.parametrize("d,N", [(1, 5), (2, 3), (3, 2)])
def test_enumeration_matches_brute_force(d, N):
    ref = brute_paths(d, N)
    got = [[tuple(r) for r in p.sites] for p in lp.enumerate_paths(d, N)]
    assert got == ref
    codes = lp.site_codes(d, N)
    assert len(set(map(tuple, codes.tolist()))) == (2 * d) ** N


def test_enumeration_budget():
    with pytest.raises(BudgetExceededError):
        next(lp.enumerate_paths(1, 27))
    with pytest.raises(BudgetExceededError):
        lp.pair_coincidence_histogram(1, 14)


def test_unit_steps():
    for p in lp.enumerate_paths(2, 4):
        assert (p.sites[0] == 0).all()
        assert (np.abs(np.diff(p.sites, axis=0)).sum(axis=1) == 1).all()


@given(d=st.integers(1, 3), N=st.integers(1, 9), data=st.data())
def test_pathid_round_trip(d, N, data):
    i = data.draw(st.integers(0, (2 * d) ** N - 1))
    p = lp.decode(d, N, i)
    assert lp.encode(p) == i
    assert lp.Path.from_steps(d, p.steps) == p


def test_decode_rejects_out_of_range():
    with pytest.raises(ValueError):
        lp.decode(1, 3, 8)


def test_coincidence_examples():
    pp_, pm = lp.Path.from_steps(1, [1, 1]), lp.Path.from_steps(1, [1, -1])
    assert lp.coincidences(pp_, pm) == 1
    assert lp.coincidences(lp.Path.from_steps(1, [1, -1]), lp.Path.from_steps(1, [-1, 1])) == 1
    for p in lp.enumerate_paths(2, 3):
        assert lp.coincidences(p, p) == 3
        assert lp.coincidences(p, p, include_origin=True) == 4


@given(N=st.integers(1, 8), a=st.integers(0, 4**8 - 1), b=st.integers(0, 4**8 - 1))
def test_coincidences_symmetric(N, a, b):
    p, q = lp.decode(2, N, a % 4**N), lp.decode(2, N, b % 4**N)
    assert lp.coincidences(p, q) == lp.coincidences(q, p)
    assert lp.coincidences(p, q, True) == lp.coincidences(p, q) + 1


def test_pair_histogram_examples():
    assert lp.pair_coincidence_histogram(1, 1) == {1: 2, 2: 2}
    h = lp.pair_coincidence_histogram(1, 2)
    assert sum(h.values()) == 16 and min(h) == 1


def test_return_histogram_examples():
    assert lp.return_count_histogram(1, 2) == {1: 2, 2: 2}
    assert lp.return_count_histogram(2, 2) == {1: 12, 2: 4}


@pytest.mark.parametrize("d,N", [(1, 4), (2, 2), (3, 1)])
def test_histograms_match_brute_force(d, N):
    assert lp.pair_coincidence_histogram(d, N) == brute_pair_histogram(d, N)
    assert lp.return_count_histogram(d, 2 * N) == brute_return_histogram(d, 2 * N)


@pytest.mark.parametrize("d,N", [(1, 1), (1, 5), (1, 9), (2, 3), (2, 4), (3, 2)])
def test_return_identity(d, N):
    assert lp.pair_coincidence_histogram(d, N) == lp.return_count_histogram(d, 2 * N)


@pytest.mark.parametrize("N", [3, 6, 10])
def test_pair_histogram_matches_difference_walk(N):
    h = lp.pair_coincidence_histogram(1, N)
    p = difference_walk_distribution(N) * 4**N  # counts m in 1..N; the histogram adds m = 0
    assert {s + 1: int(round(c)) for s, c in enumerate(p) if round(c)} == h


def test_capacity_decay():
    # exact fraction of ordered pairs with at least N^0.8 coincidences, over the whole budget
    top = max(n for n in range(1, 20) if 2 ** (2 * n) <= lp.DEFAULT_PAIR_CAP)
    fracs = [lp.pair_tail_fraction(1, n, n**0.8) for n in range(1, top + 1)]
    rises = [(n + 2, round(b - a, 4)) for n, (a, b) in enumerate(zip(fracs, fracs[1:])) if b > a]
    assert not rises, f"fraction rises at {rises}"
    assert fracs[-1] < 0.10, f"fraction at N={top} is {fracs[-1]:.4f}"


def test_return_stats_basic():
    r = lp.return_stats_mc(1, 20, 2000, seed=7)
    assert sum(r.return_counts.values()) == 2000
    assert r.escape_prob is None
    assert min(r.return_counts) >= 1
    r2 = lp.return_stats_mc(1, 20, 2000, seed=7, workers=3)
    assert r2.return_counts == r.return_counts and r2.first_return == r.first_return


def test_return_stats_d2_first_return_tail_times_log():
    # P(W2 - W1 >= n) log n levels off; the ratio over a decade of n stays near 1
    r = lp.return_stats_mc(2, 4000, 20000, seed=11)
    vals = [r.first_return_tail(n) * math.log(n) for n in (400, 4000)]
    assert 0.7 < vals[1] / vals[0] < 1.3
    assert all(0.5 < v < 5 for v in vals)


@pytest.mark.slow
def test_escape_probability_d3():
    r = lp.return_stats_mc(3, 10**4, 10**5, seed=2024)
    assert 0 < r.escape_prob < 1
    assert abs(r.escape_prob - 0.659) < 0.01
    assert r.notes


def test_histogram_export():
    h = lp.pair_coincidence_histogram(1, 2)
    csv = lp.histogram_to_csv(h).splitlines()
    assert csv[0] == "s,count"
    assert sum(int(line.split(",")[1]) for line in csv[1:]) == 16
    assert {int(k): v for k, v in json.loads(lp.histogram_to_json(h)).items()} == h
