import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spreadlab.decompose import schedule
from spreadlab.errors import InvalidInput
from spreadlab.graph import complete_bipartite
from spreadlab.spread import (
    containment_counts,
    decomposition_part_reports,
    default_tests,
    estimate_spread,
    exact_matching_spread,
    p_small_weight,
    report_from_counts,
    uniform_matching_sampler,
)


def test_deterministic_full_sampler():
    G = complete_bipartite(3)
    rep = estimate_spread(lambda rng: G.all_edges(), 1.0, [(0,), (1, 5), (2, 4, 8)], 50, seed=0)
    assert all(t.ratio == 1.0 and t.prob == 1.0 and t.stderr == 0.0 for t in rep.tests)
    assert rep.max_ratio == 1.0 and rep.samples == 50 and not rep.flagged


def test_uniform_matching_k33():
    n, N = 3, 60_000
    perms = list(itertools.permutations(range(n)))
    rep = estimate_spread(uniform_matching_sampler(n), 1 / 3, [(0,), (0, 4)], N, seed=1)
    one, two = rep.tests
    exact_one = sum(1 for s in perms if s[0] == 0) / 6
    exact_two = sum(1 for s in perms if s[0] == 0 and s[1] == 1) / 6
    assert exact_one == 1 / 3 and exact_two == 1 / 6
    assert abs(one.prob - exact_one) <= 4 * math.sqrt(exact_one * (1 - exact_one) / N)
    assert abs(two.prob - exact_two) <= 4 * math.sqrt(exact_two * (1 - exact_two) / N)
    assert one.ratio == pytest.approx(1.0, abs=0.05)
    assert two.ratio == pytest.approx(1.5, abs=0.1)


def test_exact_matching_spread_examples():
    assert exact_matching_spread(3, []) == 1
    assert exact_matching_spread(3, [(0, 0)]) == Fraction(1, 3)
    assert exact_matching_spread(3, [(0, 0), (1, 1)]) == Fraction(1, 6)
    with pytest.raises(InvalidInput):
        exact_matching_spread(3, [(0, 0), (0, 1)])
    with pytest.raises(InvalidInput):
        exact_matching_spread(3, [(0, 3)])


@pytest.mark.parametrize("n", [3, 4, 5])
def test_exact_matching_spread_vs_enumeration(n):
    perms = list(itertools.permutations(range(n)))
    edges = [(a, b) for a in range(n) for b in range(n)]
    for k in range(3):
        for T in itertools.combinations(edges, k):
            A = [a for a, _ in T]
            B = [b for _, b in T]
            if len(set(A)) < k or len(set(B)) < k:
                continue
            hits = sum(1 for s in perms if all(s[a] == b for a, b in T))
            assert exact_matching_spread(n, T) == Fraction(hits, len(perms))


def test_p_small_weight_examples():
    assert p_small_weight([()], 0.3) == 1.0
    assert p_small_weight([(1, 2, 3, 4)], 0.5) == pytest.approx(0.5**4)
    assert p_small_weight([(3 * i, 3 * i + 1, 3 * i + 2) for i in range(10)], 0.1) == pytest.approx(0.01)
    assert p_small_weight([(), (1,)], 0.0) == 1.0
    with pytest.raises(InvalidInput):
        p_small_weight([()], 1.5)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sets(st.integers(0, 30), max_size=6), max_size=10),
       st.lists(st.sets(st.integers(0, 30), max_size=6), max_size=10),
       st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_p_small_weight_monotone_and_additive(c1, c2, p, q):
    lo, hi = sorted((p, q))
    assert p_small_weight(c1, lo) <= p_small_weight(c1, hi) + 1e-12
    both = p_small_weight(c1 + c2, p)
    assert both == pytest.approx(p_small_weight(c1, p) + p_small_weight(c2, p), rel=1e-12, abs=1e-300)


def test_containment_counts_and_csv():
    draws = [np.array([0, 1, 2]), np.array([1, 2]), [2]]
    assert containment_counts(draws, [(0,), (1, 2), (2,), ()]).tolist() == [1, 2, 3, 3]
    rep = report_from_counts(0.5, [(0,), (1, 2)], [1, 2], 4)
    assert rep.tests[0].ratio == pytest.approx(0.5)
    assert rep.tests[1].ratio == pytest.approx(2.0)
    csv = rep.to_csv().splitlines()
    assert csv[0] == "test_id,size,empirical_prob,ratio,stderr"
    assert csv[2].startswith("1,2,0.50000000,2.00000000,")
    flagged = report_from_counts(0.5, [(0, 1)], [3], 4).flagged
    assert len(flagged) == 1


def test_estimate_spread_errors():
    with pytest.raises(InvalidInput):
        estimate_spread(lambda rng: [0], 0.5, [(0,)], 0)
    with pytest.raises(InvalidInput):
        estimate_spread(lambda rng: [0], 0.5, [], 10)


def test_estimate_spread_reproducible():
    s = uniform_matching_sampler(4)
    a = estimate_spread(s, 0.25, [(0,), (0, 5)], 500, seed=3, chunk=64)
    b = estimate_spread(s, 0.25, [(0,), (0, 5)], 500, seed=3)
    assert [t.prob for t in a.tests] == [t.prob for t in b.tests]


def test_default_tests_shape():
    G = complete_bipartite(8)
    tests = default_tests(G, np.random.default_rng(0))
    singles = [T for T in tests if len(T) == 1]
    pairs = [T for T in tests if len(T) == 2]
    triples = [T for T in tests if len(T) == 3]
    assert len(singles) == 3 * 8 and len(pairs) == 50 and len(triples) == 20
    shared = sum(1 for e, f in pairs if G.a[e] == G.a[f] or G.b[e] == G.b[f])
    assert shared >= 25


def test_decomposition_part_marginals():
    n, runs = 16, 400
    G = complete_bipartite(n)
    s = schedule(n, S=2)
    tests = [(0,), (17,), (0, 17)]
    reps = decomposition_part_reports(G, 1, s, tests, runs, seed=1)
    assert len(reps) == 2
    for k in range(2):
        total = sum(rep.tests[k].prob for rep in reps)
        assert total == pytest.approx(1.0)  # each edge lies in exactly one part
        for rep in reps:
            assert abs(rep.tests[k].prob - 0.5) <= 4 * math.sqrt(0.25 / runs)
    assert reps[0].p == pytest.approx(8 / 16)
