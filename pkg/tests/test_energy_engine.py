import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dprem import energy_engine as ee
from dprem import lattice_paths as lp
from dprem.environment import DistributionSpec, EnvField

from oracles import brute_coincidences, brute_paths, direct_energy

GAUSS = DistributionSpec("gaussian")


def tuples(d, N, l):
    """Hypothesis strategy for PathTuples of l distinct paths."""
    q = (2 * d) ** N
    return st.lists(st.integers(0, q - 1), min_size=l, max_size=l, unique=True).map(
        lambda ids: lp.PathTuple.from_ids(d, N, ids))


def test_single_step_energy():
    env = EnvField(GAUSS, 4, 0)
    p = lp.Path.from_steps(1, [1])
    assert ee.path_energy(p, env) == env.value_at(1, (1,))


@pytest.mark.parametrize("dist", ["gaussian", "uniform", "cexp"])
def test_energy_matches_direct_lookup(dist):
    env = EnvField(DistributionSpec(dist), 123, 5)
    sites = brute_paths(1, 4)
    e = ee.all_energies(1, 4, env)
    for i, s in enumerate(sites):
        assert e[i] == pytest.approx(direct_energy(env, s), abs=1e-14)
        assert e[i] == pytest.approx(ee.path_energy(lp.decode(1, 4, i), env), abs=1e-14)


def test_energies_2d_match_direct_lookup():
    env = EnvField(GAUSS, 77, 1)
    e = ee.all_energies(2, 3, env)
    for i, s in enumerate(brute_paths(2, 3)):
        assert e[i] == pytest.approx(direct_energy(env, s), abs=1e-14)


def test_energy_variance_over_samples():
    p = lp.Path.from_steps(1, [1, 1, -1, 1, -1, -1, 1, 1])
    v = np.array([ee.path_energy(p, EnvField(GAUSS, 1, s)) for s in range(20000)])
    assert abs(v.var() - 1) < 3 * math.sqrt(2 / v.size)


def test_gaps_small_case():
    env = EnvField(GAUSS, 2, 0)
    g = ee.all_gaps(1, 2, env, 0.0, g_max=math.inf)
    dn = math.sqrt(math.pi / 2) / 4
    direct = sorted(abs(ee.path_energy(p, env)) / dn for p in lp.enumerate_paths(1, 2))
    assert g.total_paths == 4 and len(g.gaps) == 4
    assert np.allclose(g.gaps, direct, rtol=1e-14)
    assert g.delta_n == pytest.approx(dn, rel=1e-15)


def test_gaps_truncation_and_order():
    env = EnvField(GAUSS, 3, 0)
    full = ee.all_gaps(1, 10, env, 0.3, g_max=math.inf)
    part = ee.all_gaps(1, 10, env, 0.3, g_max=5.0)
    assert len(full.gaps) == 2**10
    assert np.all(np.diff(full.gaps) >= 0) and full.gaps[0] >= 0
    assert np.array_equal(part.gaps, full.gaps[full.gaps <= 5.0])


def test_gaps_sign_flip_symmetry():
    env = EnvField(GAUSS, 5, 0)
    a = ee.all_gaps(1, 8, env, 0.7)
    b = ee.all_gaps(1, 8, env.flipped(), -0.7)
    assert np.array_equal(a.gaps, b.gaps)


@pytest.mark.parametrize("workers", [2, 3, 7])
def test_gaps_independent_of_workers(workers):
    env = EnvField(DistributionSpec("uniform"), 11, 4)
    a = ee.all_gaps(2, 6, env, 0.2)
    b = ee.all_gaps(2, 6, env, 0.2, workers=workers)
    assert a.gaps.tobytes() == b.gaps.tobytes()
    assert np.array_equal(a.path_ids, b.path_ids)


def test_gap_process_json():
    g = ee.all_gaps(1, 6, EnvField(GAUSS, 1, 0), 0.0)
    obj = json.loads(g.to_json())
    assert set(obj) == {"d", "n", "e_level", "delta_n", "g_max", "total_paths", "gaps"}
    back = ee.GapProcess.from_json(g.to_json())
    assert np.array_equal(back.gaps, g.gaps) and back.total_paths == g.total_paths


def test_budget_guard():
    with pytest.raises(ee.BudgetExceededError):
        ee.all_gaps(2, 14, EnvField(GAUSS, 1, 0), 0.0)


def test_covariance_examples():
    t = lp.PathTuple((lp.Path.from_steps(1, [1, 1]), lp.Path.from_steps(1, [1, -1])))
    assert np.allclose(ee.covariance_matrix(t).entries, [[1, 0.5], [0.5, 1]])
    # paths leaving along different axes and directions never meet again
    apart = lp.PathTuple(tuple(lp.Path.from_steps(2, [s] * 4) for s in (1, -1, 2, -2)))
    assert np.array_equal(ee.covariance_matrix(apart).entries, np.eye(4))


@given(tuples(1, 8, 3))
def test_covariance_entries_and_psd(t):
    cov = ee.covariance_matrix(t)
    assert (np.diag(cov.counts) == t.length).all()
    for i, j in itertools.combinations(range(t.l), 2):
        assert cov.counts[i, j] == lp.coincidences(t.paths[i], t.paths[j]) == cov.counts[j, i]
        assert cov.counts[i, j] == brute_coincidences([tuple(r) for r in t.paths[i].sites],
                                                      [tuple(r) for r in t.paths[j].sites])
    assert np.linalg.eigvalsh(cov.entries).min() >= -1e-10


@given(st.sampled_from([(1, 4), (1, 8), (1, 16), (2, 4), (2, 8), (2, 16)]).flatmap(
    lambda dn: st.integers(2, 4).flatmap(lambda l: tuples(dn[0], dn[1], l))))
def test_pattern_matrix_identity(t):
    pm = ee.pattern_matrix(t)
    assert np.array_equal(pm.gram(), ee.covariance_matrix(t).counts)
    N, l = t.length, t.l
    assert N <= pm.rows.shape[0] <= l * N
    for n in range(1, N + 1):
        block = pm.rows[pm.step == n]
        assert (block.sum(axis=0) == 1).all() and (block.sum(axis=1) >= 1).all()


def test_pattern_matrix_examples():
    N = 6
    a = lp.Path.from_steps(1, [1] * N)
    b = lp.Path.from_steps(1, [-1] * N)
    assert ee.pattern_matrix(lp.PathTuple((a, b))).rows.shape == (2 * N, 2)
    for k in range(N):
        c = lp.Path.from_steps(1, [1] * k + [-1] * (N - k))
        if c == a:
            continue
        pm = ee.pattern_matrix(lp.PathTuple((a, c)))
        assert pm.rows.shape[0] == 2 * N - k
    # blocks are ordered by their smallest member
    t = lp.PathTuple((lp.Path.from_steps(1, [1, 1]), lp.Path.from_steps(1, [-1, 1]), lp.Path.from_steps(1, [1, -1])))
    assert pm_rows(t) == [(1, 0, 1), (0, 1, 0), (1, 0, 0), (0, 1, 1)]


def pm_rows(t):
    return [tuple(int(v) for v in r) for r in ee.pattern_matrix(t).rows]


def test_rank_examples():
    one = ee.rank_analysis(lp.PathTuple((lp.decode(1, 5, 3),)))
    assert one.rank == 1 and one.det_exact == 1 and not one.degenerate
    for ids in [(0, 1), (5, 30), (12, 13)]:
        assert ee.rank_analysis(lp.PathTuple.from_ids(1, 5, ids)).rank == 2


def test_exact_helpers():
    assert ee.exact_rank([[2, 4], [1, 2]]) == 1
    assert ee.exact_det(np.array([[4, 2], [2, 4]]), 4) == Fraction(3, 4)
    assert ee.numeric_rank(np.array([[1.0, 1.0], [1.0, 1.0 + 1e-12]])) == 1


def _degenerate_tuples(d, N, l):
    codes = lp.site_codes(d, N, include_origin=False)
    P = codes.shape[0]
    S = (codes[:, None, :] == codes[None, :, :]).sum(axis=2)
    found = []
    for ids in itertools.combinations(range(P), l):
        counts = S[np.ix_(ids, ids)]
        if ee.exact_det(counts, N) == 0:
            found.append(ids)
    return found


@pytest.mark.parametrize("N", range(1, 7))
def test_no_degenerate_triples_d1(N):
    assert _degenerate_tuples(1, N, 3) == []


def test_no_degenerate_triples_d2():
    for N in (1, 2, 3):
        assert _degenerate_tuples(2, N, 3) == []


def test_degenerate_quadruples_structure():
    found = _degenerate_tuples(1, 4, 4)
    assert len(found) == 10
    for ids in found:
        t = lp.PathTuple.from_ids(1, 4, ids)
        info = ee.rank_analysis(t)
        assert info.degenerate and info.rank == info.exact_rank < 4
        assert ee.basis_distinct_steps(t, info.basis) == []
