import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spreadlab.designs import (
    ColoringWitness,
    ExactCoverInstance,
    LatinSquareWitness,
    STSWitness,
    count_exact_covers,
    count_latin_squares,
    count_sts,
    enumerate_exact_covers,
    latin_cover_instance,
    latin_square_exists,
    list_coloring_bipartite,
    list_coloring_complete,
    sample_3graph,
    sample_lists,
    sample_tripartite,
    solve_exact_cover,
    solve_exact_cover_ex,
    sts_exists,
    verify_witness,
)
from spreadlab.errors import BudgetExhausted, InvalidInput
from spreadlab.graph import ListAssignment, TripleSystem, host_edges


def brute_covers(inst):
    """All exact covers: every include/exclude choice per row, pruned on over-covering.

    Rows without a primary item are never part of a cover (they cannot help).
    """
    rows = inst.rows
    out = []

    def walk(k, used, chosen):
        if k == len(rows):
            if all(x in used for x in range(inst.n_primary)):
                out.append(list(chosen))
            return
        walk(k + 1, used, chosen)
        r = rows[k]
        if any(x < inst.n_primary for x in r) and not used.intersection(r):
            walk(k + 1, used | set(r), chosen + [k])

    walk(0, frozenset(), [])
    return out


# ---------------------------------------------------------------------------
# exact cover


def test_exact_cover_trivial_cases():
    assert solve_exact_cover(ExactCoverInstance(1, 0, [(0,)])) == [0]
    assert solve_exact_cover(ExactCoverInstance(2, 0, [(0,)])) is None
    assert solve_exact_cover(ExactCoverInstance(0, 0, [])) == []
    with pytest.raises(InvalidInput):
        ExactCoverInstance(1, 0, [(1,)])
    with pytest.raises(InvalidInput):
        ExactCoverInstance(2, 0, [(0, 0)])


def test_secondary_items():
    inst = ExactCoverInstance(2, 1, [(0,), (1,), (0, 1), (0, 2), (1, 2)])
    sols = sorted(enumerate_exact_covers(inst))
    assert sols == sorted(brute_covers(inst))
    assert len(sols) == 4


@st.composite
def cover_instances(draw):
    n_primary = draw(st.integers(0, 6))
    n_secondary = draw(st.integers(0, 3))
    total = n_primary + n_secondary
    if total == 0:
        return ExactCoverInstance(0, 0, [])
    rows = draw(st.lists(st.sets(st.integers(0, total - 1), min_size=1, max_size=4), max_size=20))
    return ExactCoverInstance(n_primary, n_secondary, rows)


@settings(max_examples=200, deadline=None)
@given(cover_instances())
def test_exact_cover_matches_brute_force(inst):
    truth = brute_covers(inst)
    sol = solve_exact_cover(inst)
    assert (sol is not None) == bool(truth)
    if sol is not None:
        assert sol in truth
    assert count_exact_covers(inst) == len(truth)
    assert sorted(enumerate_exact_covers(inst)) == sorted(truth)


def test_exact_cover_random_6x6():
    rng = np.random.default_rng(66)
    for _ in range(100):
        rows = [tuple(np.flatnonzero(rng.random(6) < 0.35).tolist()) or (int(rng.integers(6)),) for _ in range(6)]
        inst = ExactCoverInstance(6, 0, rows)
        assert (solve_exact_cover(inst) is not None) == bool(brute_covers(inst))


def test_exact_cover_budget():
    n = 6
    triples = [(x, y, z) for x in range(n) for y in range(n) for z in range(n)]
    with pytest.raises(BudgetExhausted) as exc:
        count_exact_covers(latin_cover_instance(n, triples), node_budget=1000)
    assert exc.value.attempts > 1000
    res = solve_exact_cover_ex(latin_cover_instance(3, [(x, y, z) for x in range(3) for y in range(3)
                                                         for z in range(3)]))
    assert res.solution is not None and res.nodes >= 9


def test_count_limit():
    inst = latin_cover_instance(4, list(itertools.product(range(4), repeat=3)))
    assert count_exact_covers(inst, limit=10) == 10


# ---------------------------------------------------------------------------
# Latin squares


def complete_tripartite(n):
    return TripleSystem("tripartite", n, itertools.product(range(n), repeat=3))


def test_latin_counts():
    assert count_latin_squares(1) == 1
    assert count_latin_squares(2) == 2
    assert count_latin_squares(3) == 12
    assert count_latin_squares(4) == 576


def test_latin_order_five_count():
    assert count_latin_squares(5) == 161280


def test_latin_exists_examples():
    w = latin_square_exists(complete_tripartite(3))
    assert w is not None and verify_witness(w, complete_tripartite(3))
    assert latin_square_exists(TripleSystem("tripartite", 3, [])) is None
    sq = [(x, y, (x + 2 * y) % 5) for x in range(5) for y in range(5)]
    T = TripleSystem("tripartite", 5, sq)
    w = latin_square_exists(T)
    assert sorted(w.triples) == sorted(sq)
    arr = w.as_array()
    assert all(len(set(arr[i])) == 5 and len(set(arr[:, i])) == 5 for i in range(5))
    with pytest.raises(InvalidInput):
        latin_square_exists(TripleSystem("plain", 5, [(0, 1, 2)]))


def brute_latin_in(T):
    """Does T contain a Latin square? (rows as permutations; n <= 3)."""
    n = T.n
    allowed = set(T.triples)
    rows = [[p for p in itertools.permutations(range(n)) if all((x, y, p[y]) in allowed for y in range(n))]
            for x in range(n)]
    for choice in itertools.product(*rows):
        if all(len({choice[x][y] for x in range(n)}) == n for y in range(n)):
            return True
    return False


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.3, 1.0))
def test_latin_random_n3_matches_brute(seed, p):
    T = sample_tripartite(3, p, seed)
    w = latin_square_exists(T)
    assert (w is not None) == brute_latin_in(T)
    if w is not None:
        assert verify_witness(w, T)


# ---------------------------------------------------------------------------
# Steiner triple systems


def test_sts_examples():
    assert sts_exists(TripleSystem("plain", 6, itertools.combinations(range(6), 3))) is None
    full7 = TripleSystem("plain", 7, itertools.combinations(range(7), 3))
    w = sts_exists(full7)
    assert w is not None and len(w.triples) == 7 and verify_witness(w, full7)
    no01 = TripleSystem("plain", 7, [t for t in itertools.combinations(range(7), 3) if not {0, 1} <= set(t)])
    assert sts_exists(no01) is None
    with pytest.raises(InvalidInput):
        sts_exists(complete_tripartite(3))


def test_sts_counts():
    assert count_sts(3) == 1
    assert count_sts(6) == 0
    assert count_sts(7) == 30
    assert count_sts(9) == 840


# ---------------------------------------------------------------------------
# list colorings


def test_list_coloring_bipartite_examples():
    n = 4
    full = ListAssignment("bipartite", n, n, n, {e: range(n) for e in host_edges("bipartite", n)})
    w = list_coloring_bipartite(n, full)
    assert w is not None and verify_witness(w, full)
    forced = ListAssignment("bipartite", n, 1, n, {(a, b): [(a + b) % n] for a, b in host_edges("bipartite", n)})
    w = list_coloring_bipartite(n, forced)
    assert w.colors == {(a, b): (a + b) % n for a, b in host_edges("bipartite", n)}
    clash = dict(forced.lists)
    clash[(0, 1)] = ((0 + 0) % n,)  # same color as (0, 0) at vertex a0
    clash = ListAssignment("bipartite", n, 1, n, clash)
    assert list_coloring_bipartite(n, clash) is None
    with pytest.raises(InvalidInput):
        list_coloring_bipartite(n, ListAssignment("bipartite", n, 1, n + 1, {e: [0] for e in host_edges("bipartite", n)}))


def brute_complete_coloring(L, palette):
    edges = host_edges("complete", L.n)
    for cols in itertools.product(range(palette), repeat=len(edges)):
        if any(c not in L.lists[e] for e, c in zip(edges, cols)):
            continue
        seen = set()
        ok = True
        for (u, v), c in zip(edges, cols):
            if (u, c) in seen or (v, c) in seen:
                ok = False
                break
            seen.add((u, c))
            seen.add((v, c))
        if ok:
            return True
    return False


def test_list_coloring_complete_examples():
    full = ListAssignment("complete", 4, 3, 3, {e: range(3) for e in host_edges("complete", 4)})
    w = list_coloring_complete(4, full)
    assert w is not None and verify_witness(w, full)
    conflict = {e: [0] for e in host_edges("complete", 4)}
    assert list_coloring_complete(4, ListAssignment("complete", 4, 1, 3, conflict)) is None
    with pytest.raises(InvalidInput):
        list_coloring_complete(3, full)


def test_list_coloring_complete_k4_random_lists():
    agree = 0
    for seed in range(100):
        L = sample_lists("complete", 4, 2 if seed % 2 else 3, 3, seed)
        w = list_coloring_complete(4, L)
        assert (w is not None) == brute_complete_coloring(L, 3)
        if w is not None:
            assert verify_witness(w, L)
        agree += 1
    assert agree == 100


# ---------------------------------------------------------------------------
# samplers


def test_samplers_extremes():
    assert len(sample_tripartite(4, 1.0, 0)) == 64
    assert len(sample_tripartite(4, 0.0, 0)) == 0
    assert len(sample_3graph(6, 1.0, 0)) == 20
    assert len(sample_3graph(6, 0.0, 0)) == 0
    with pytest.raises(InvalidInput):
        sample_tripartite(3, 1.5)


def test_sample_tripartite_mean():
    N, n, p = 10_000, 6, 0.3
    rng = np.random.default_rng(0)
    counts = np.array([len(sample_tripartite(n, p, rng)) for _ in range(N)])
    sd = np.sqrt(n**3 * p * (1 - p) / N)
    assert abs(counts.mean() - p * n**3) <= 4 * sd


def test_sample_lists_uniform_subsets():
    L = sample_lists("bipartite", 3, 2, 4, seed=1)
    assert all(len(c) == 2 and set(c) <= set(range(4)) for c in L.lists.values())
    rng = np.random.default_rng(2)
    N = 6000
    counts = {}
    for _ in range(N):
        c = sample_lists("bipartite", 1, 2, 4, rng).lists[(0, 0)]
        counts[c] = counts.get(c, 0) + 1
    assert len(counts) == 6
    p = 1 / 6
    assert all(abs(v / N - p) <= 4 * np.sqrt(p * (1 - p) / N) for v in counts.values())
    with pytest.raises(InvalidInput):
        sample_lists("bipartite", 3, 5, 4)


# ---------------------------------------------------------------------------
# witness verification and mutation testing


def test_verify_rejects_duplicate_pair():
    full7 = TripleSystem("plain", 7, itertools.combinations(range(7), 3))
    bad = STSWitness(7, [(0, 1, 2), (0, 1, 3), (0, 4, 5), (0, 6, 1), (2, 4, 6), (3, 4, 5), (2, 3, 5)])
    assert not verify_witness(bad, full7)
    with pytest.raises(InvalidInput):
        verify_witness(object(), full7)


def test_mutated_witnesses_rejected():
    rng = np.random.default_rng(100)
    n = 5
    T = complete_tripartite(n)
    w = latin_square_exists(T)
    full7 = TripleSystem("plain", 7, itertools.combinations(range(7), 3))
    s = sts_exists(full7)
    Lfull = ListAssignment("bipartite", n, n, n, {e: range(n) for e in host_edges("bipartite", n)})
    c = list_coloring_bipartite(n, Lfull)
    for _ in range(100):
        trip = list(w.triples)
        k = int(rng.integers(len(trip)))
        x, y, z = trip[k]
        trip[k] = (x, y, (z + int(rng.integers(1, n))) % n)
        assert not verify_witness(LatinSquareWitness(n, trip), T)
        st_ = list(s.triples)
        k = int(rng.integers(len(st_)))
        others = [t for t in itertools.combinations(range(7), 3) if t not in st_]
        st_[k] = others[int(rng.integers(len(others)))]
        assert not verify_witness(STSWitness(7, st_), full7)
        cols = dict(c.colors)
        e = list(cols)[int(rng.integers(len(cols)))]
        cols[e] = (cols[e] + int(rng.integers(1, n))) % n
        assert not verify_witness(ColoringWitness("bipartite", n, cols), Lfull)


def test_witness_text():
    w = LatinSquareWitness(2, [(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)])
    assert w.to_text() == "0 0 0\n0 1 1\n1 0 1\n1 1 0\n"
    c = ColoringWitness("complete", 2, {(0, 1): 0})
    assert c.to_text() == "0 1 0\n"


# ---------------------------------------------------------------------------
# monotonicity


def test_monotone_chains():
    rng = np.random.default_rng(7)
    n = 4
    for _ in range(20):
        order = rng.permutation(n**3)
        was = False
        for m in range(8, n**3 + 1, 4):
            idx = np.sort(order[:m])
            T = TripleSystem("tripartite", n, zip(idx // 16, idx // 4 % 4, idx % 4))
            now = latin_square_exists(T) is not None
            assert now or not was
            was = now
        assert was  # the complete system has a square
    for _ in range(20):
        order = rng.random((16, n)).argsort(axis=1)
        was = False
        for k in range(1, n + 1):
            L = ListAssignment("bipartite", n, k, n, {e: order[i, :k].tolist()
                                                      for i, e in enumerate(host_edges("bipartite", n))})
            now = list_coloring_bipartite(n, L) is not None
            assert now or not was
            was = now
        assert was
