"""Exact containment solvers for designs and list edge colorings.

Every problem is encoded as an exact cover: *primary* items must be covered
exactly once, *secondary* items at most once. The search is Algorithm X on
dancing links (circular doubly-linked lists in flat integer arrays, compiled
with numba), always branching on the primary item with fewest remaining rows,
ties broken by item index, so results are deterministic given the row order.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from numba import njit

from .errors import BudgetExhausted, InvalidInput
from .graph import ListAssignment, TripleSystem, host_edges
from .prob import as_rng

DEFAULT_NODE_BUDGET = 10**7


@dataclass
class ExactCoverInstance:
    """Items ``0..n_primary-1`` are primary, the next ``n_secondary`` secondary.

    A cover is a set of rows, each containing at least one primary item, that
    covers every primary item exactly once and every secondary item at most
    once (rows made only of secondary items are never selected).
    """

    n_primary: int
    n_secondary: int
    rows: list

    def __post_init__(self):
        total = self.n_primary + self.n_secondary
        rows = []
        for r in self.rows:
            r = tuple(sorted(int(x) for x in r))
            if any(not 0 <= x < total for x in r):
                raise InvalidInput(f"row {r} references an item outside [0, {total})")
            if len(set(r)) != len(r):
                raise InvalidInput(f"row {r} repeats an item")
            rows.append(r)
        self.rows = rows

    @property
    def n_items(self):
        return self.n_primary + self.n_secondary


@njit(cache=True)
def _build_links(n_primary, n_items, items, offsets):
    """Flat link arrays; node 0 is the root and node j+1 heads item j."""
    size = 1 + n_items + items.shape[0]
    L = np.arange(size)
    R = np.arange(size)
    U = np.arange(size)
    D = np.arange(size)
    C = np.arange(size)
    row_of = np.full(size, -1)
    S = np.zeros(n_items + 1, dtype=np.int64)
    # primary headers form the ring through the root; secondary headers stay self-linked
    for h in range(n_primary + 1):
        R[h] = h + 1 if h < n_primary else 0
        L[h] = h - 1 if h > 0 else n_primary
    node = n_items + 1
    for r in range(offsets.shape[0] - 1):
        first = node
        for k in range(offsets[r], offsets[r + 1]):
            h = items[k] + 1
            C[node] = h
            row_of[node] = r
            U[node] = U[h]
            D[node] = h
            D[U[h]] = node
            U[h] = node
            S[h] += 1
            if node > first:
                L[node] = node - 1
                R[node - 1] = node
            R[node] = first
            L[first] = node
            node += 1
    return L, R, U, D, C, S, row_of


@njit(cache=True)
def _cover(c, L, R, U, D, C, S):
    L[R[c]] = L[c]
    R[L[c]] = R[c]
    i = D[c]
    while i != c:
        j = R[i]
        while j != i:
            U[D[j]] = U[j]
            D[U[j]] = D[j]
            S[C[j]] -= 1
            j = R[j]
        i = D[i]


@njit(cache=True)
def _uncover(c, L, R, U, D, C, S):
    i = U[c]
    while i != c:
        j = L[i]
        while j != i:
            S[C[j]] += 1
            U[D[j]] = j
            D[U[j]] = j
            j = L[j]
        i = U[i]
    L[R[c]] = c
    R[L[c]] = c


@njit(cache=True)
def _search(n_primary, n_items, items, offsets, node_budget, limit, store_cap):
    """Iterative Algorithm X.

    Returns (status, nodes, count, store, lengths): status 0 finished, 1 hit
    ``limit`` solutions, 2 out of budget; the first ``store_cap`` solutions are
    kept as row indices.
    """
    L, R, U, D, C, S, row_of = _build_links(n_primary, n_items, items, offsets)
    depth = n_primary + 1
    chosen = np.zeros(depth, dtype=np.int64)
    cols = np.zeros(depth, dtype=np.int64)
    store = np.full((max(store_cap, 1), depth), -1, dtype=np.int64)
    lengths = np.zeros(max(store_cap, 1), dtype=np.int64)
    nodes = 0
    count = 0
    level = 0
    entering = True
    r = 0
    c = 0
    while True:
        if entering:
            nodes += 1
            if nodes > node_budget:
                return 2, nodes, count, store, lengths
            if R[0] == 0:
                if count < store_cap:
                    for k in range(level):
                        store[count, k] = row_of[chosen[k]]
                    lengths[count] = level
                count += 1
                if limit > 0 and count >= limit:
                    return 1, nodes, count, store, lengths
                entering = False
            else:
                c = R[0]
                best = S[c]
                j = R[c]
                while j != 0 and best > 0:
                    if S[j] < best:
                        c = j
                        best = S[j]
                    j = R[j]
                if best == 0:
                    entering = False
                else:
                    _cover(c, L, R, U, D, C, S)
                    cols[level] = c
                    r = D[c]
        if not entering:
            # backtrack: undo the row chosen one level up and move to its successor
            if level == 0:
                return 0, nodes, count, store, lengths
            level -= 1
            r = chosen[level]
            c = cols[level]
            j = L[r]
            while j != r:
                _uncover(C[j], L, R, U, D, C, S)
                j = L[j]
            r = D[r]
        # try row r of column c, or give the column back once its rows are used up
        if r == c:
            _uncover(c, L, R, U, D, C, S)
            entering = False
            continue
        chosen[level] = r
        j = R[r]
        while j != r:
            _cover(C[j], L, R, U, D, C, S)
            j = R[j]
        level += 1
        entering = True


def _run(inst, node_budget, limit, store_cap):
    lens = [len(r) for r in inst.rows]
    offsets = np.zeros(len(lens) + 1, dtype=np.int64)
    np.cumsum(lens, out=offsets[1:])
    items = np.fromiter((x for r in inst.rows for x in r), dtype=np.int64, count=int(offsets[-1]))
    status, nodes, count, store, lengths = _search(
        inst.n_primary, inst.n_items, items, offsets, int(node_budget), int(limit), int(store_cap)
    )
    if status == 2:
        raise BudgetExhausted(f"node budget {node_budget} exhausted", int(nodes))
    sols = [sorted(store[k, : lengths[k]].tolist()) for k in range(min(count, store_cap))]
    return int(nodes), int(count), sols


@dataclass
class SolveResult:
    solution: list | None
    nodes: int


def solve_exact_cover(inst: ExactCoverInstance, node_budget=DEFAULT_NODE_BUDGET):
    """Row indices of one exact cover (sorted), or None if none exists.

    Raises BudgetExhausted (``attempts`` = nodes expanded) when the search
    expands more than ``node_budget`` nodes.
    """
    return solve_exact_cover_ex(inst, node_budget).solution


def solve_exact_cover_ex(inst: ExactCoverInstance, node_budget=DEFAULT_NODE_BUDGET) -> SolveResult:
    nodes, _, sols = _run(inst, node_budget, 1, 1)
    return SolveResult(sols[0] if sols else None, nodes)


def count_exact_covers(inst: ExactCoverInstance, node_budget=DEFAULT_NODE_BUDGET, limit=None) -> int:
    """Number of exact covers (stopping early at ``limit`` if given)."""
    return _run(inst, node_budget, 0 if limit is None else limit, 0)[1]


def enumerate_exact_covers(inst: ExactCoverInstance, node_budget=DEFAULT_NODE_BUDGET, max_solutions=10**5) -> list:
    """All exact covers as sorted row-index lists (at most ``max_solutions``)."""
    return _run(inst, node_budget, max_solutions, max_solutions)[2]


# ---------------------------------------------------------------------------
# witnesses


@dataclass
class LatinSquareWitness:
    n: int
    triples: list

    def as_array(self):
        sq = np.full((self.n, self.n), -1, dtype=np.int64)
        for x, y, z in self.triples:
            sq[x, y] = z
        return sq

    def to_text(self):
        return "".join(f"{x} {y} {z}\n" for x, y, z in self.triples)


@dataclass
class STSWitness:
    n: int
    triples: list

    def to_text(self):
        return "".join(f"{x} {y} {z}\n" for x, y, z in self.triples)


@dataclass
class ColoringWitness:
    host: str
    n: int
    colors: dict

    def to_text(self):
        return "".join(f"{a} {b} {c}\n" for (a, b), c in sorted(self.colors.items()))


# ---------------------------------------------------------------------------
# encodings


def latin_cover_instance(n, triples):
    """Items (x,y), (x,z), (y,z) for a tripartite triple list; one row per triple."""
    nn = n * n
    rows = [(x * n + y, nn + x * n + z, 2 * nn + y * n + z) for x, y, z in triples]
    return ExactCoverInstance(3 * nn, 0, rows)


def latin_square_exists(T: TripleSystem, budget=DEFAULT_NODE_BUDGET):
    """A Latin square formed by n^2 triples of the tripartite system T, or None."""
    if T.mode != "tripartite":
        raise InvalidInput("latin_square_exists needs a tripartite triple system")
    triples = list(T.triples)
    sol = solve_exact_cover(latin_cover_instance(T.n, triples), budget)
    if sol is None:
        return None
    return LatinSquareWitness(T.n, [triples[k] for k in sol])


def sts_cover_instance(n, triples):
    pair = {}
    for u, v in combinations(range(n), 2):
        pair[u, v] = len(pair)
    rows = [(pair[x, y], pair[x, z], pair[y, z]) for x, y, z in triples]
    return ExactCoverInstance(len(pair), 0, rows)


def sts_exists(H: TripleSystem, budget=DEFAULT_NODE_BUDGET):
    """A Steiner triple system inside the plain triple system H, or None."""
    if H.mode != "plain":
        raise InvalidInput("sts_exists needs a plain triple system")
    n = H.n
    if n >= 2 and n % 6 not in (1, 3):
        return None
    triples = list(H.triples)
    sol = solve_exact_cover(sts_cover_instance(n, triples), budget)
    if sol is None:
        return None
    return STSWitness(n, [triples[k] for k in sol])


def list_coloring_bipartite(n, L: ListAssignment, budget=DEFAULT_NODE_BUDGET):
    """Proper L-coloring of the edges of K_{n,n} from the palette [n], or None.

    This is a Latin square restricted to triples (a, b, c) with c in L(ab).
    """
    if L.host != "bipartite" or L.n != n:
        raise InvalidInput("list assignment must be on K_{n,n}")
    if L.n_colors != n:
        raise InvalidInput(f"palette must be [n] = [{n}], got {L.n_colors} colors")
    triples = [(a, b, c) for (a, b), cols in L.lists.items() for c in cols]
    sol = solve_exact_cover(latin_cover_instance(n, triples), budget)
    if sol is None:
        return None
    return ColoringWitness("bipartite", n, {(triples[k][0], triples[k][1]): triples[k][2] for k in sol})


def list_coloring_complete(m, L: ListAssignment, palette_size=None, budget=DEFAULT_NODE_BUDGET):
    """Proper L-coloring of the edges of K_m (m even), or None.

    Primary items are the edges, secondary items the (vertex, color) pairs;
    the palette defaults to m - 1 colors.
    """
    if m % 2 or m < 2:
        raise InvalidInput("m must be a positive even vertex count")
    if L.host != "complete" or L.n != m:
        raise InvalidInput("list assignment must be on K_m")
    N = m - 1 if palette_size is None else int(palette_size)
    if L.n_colors > N:
        raise InvalidInput(f"lists use {L.n_colors} colors, palette has {N}")
    edges = host_edges("complete", m)
    index = {e: k for k, e in enumerate(edges)}
    E = len(edges)
    rows, meta = [], []
    for e in edges:
        u, v = e
        for c in L.lists[e]:
            rows.append((index[e], E + u * N + c, E + v * N + c))
            meta.append((e, c))
    sol = solve_exact_cover(ExactCoverInstance(E, m * N, rows), budget)
    if sol is None:
        return None
    return ColoringWitness("complete", m, {meta[k][0]: meta[k][1] for k in sol})


# ---------------------------------------------------------------------------
# counting


def count_latin_squares(n, budget=DEFAULT_NODE_BUDGET) -> int:
    triples = [(x, y, z) for x in range(n) for y in range(n) for z in range(n)]
    return count_exact_covers(latin_cover_instance(n, triples), budget)


def count_sts(n, budget=DEFAULT_NODE_BUDGET) -> int:
    """Number of labeled Steiner triple systems on [n]."""
    if n >= 2 and n % 6 not in (1, 3):
        return 0
    return count_exact_covers(sts_cover_instance(n, list(combinations(range(n), 3))), budget)


# ---------------------------------------------------------------------------
# random instances


def sample_tripartite(n, p, seed=None) -> TripleSystem:
    """Each of the n^3 triples (x, y, z) independently with probability p."""
    if not 0 <= p <= 1:
        raise InvalidInput("p must lie in [0, 1]")
    keep = as_rng(seed).random(n**3) < p
    idx = np.flatnonzero(keep)
    return TripleSystem("tripartite", n, zip(idx // (n * n), idx // n % n, idx % n))


def sample_3graph(n, p, seed=None) -> TripleSystem:
    """Each of the C(n, 3) triples of [n] independently with probability p."""
    if not 0 <= p <= 1:
        raise InvalidInput("p must lie in [0, 1]")
    allt = list(combinations(range(n), 3))
    keep = as_rng(seed).random(len(allt)) < p
    return TripleSystem("plain", n, [t for t, k in zip(allt, keep) if k])


def sample_lists(host, n, k, palette, seed=None) -> ListAssignment:
    """Independent uniform k-subsets of [palette] on every host edge."""
    if not 0 <= k <= palette:
        raise InvalidInput("need 0 <= k <= palette")
    edges = host_edges(host, n)
    order = as_rng(seed).random((len(edges), palette)).argsort(axis=1)
    return ListAssignment(host, n, k, palette, {e: order[i, :k].tolist() for i, e in enumerate(edges)})


# ---------------------------------------------------------------------------
# verification (independent of the solver)


def verify_witness(witness, instance) -> bool:
    """Re-check a witness against its instance from scratch."""
    if isinstance(witness, LatinSquareWitness):
        return _verify_latin(witness, instance)
    if isinstance(witness, STSWitness):
        return _verify_sts(witness, instance)
    if isinstance(witness, ColoringWitness):
        return _verify_coloring(witness, instance)
    raise InvalidInput(f"unknown witness type {type(witness).__name__}")


def _verify_latin(w, T):
    n = w.n
    if not isinstance(T, TripleSystem) or T.mode != "tripartite" or T.n != n:
        return False
    trip = [tuple(t) for t in w.triples]
    if len(trip) != n * n or len(set(trip)) != len(trip) or not set(trip) <= set(T.triples):
        return False
    rc, rs, cs = set(), set(), set()
    for x, y, z in trip:
        rc.add((x, y))
        rs.add((x, z))
        cs.add((y, z))
    return len(rc) == len(rs) == len(cs) == n * n


def _verify_sts(w, H):
    n = w.n
    if not isinstance(H, TripleSystem) or H.mode != "plain" or H.n != n:
        return False
    trip = [tuple(sorted(t)) for t in w.triples]
    if len(set(trip)) != len(trip) or not set(trip) <= set(H.triples):
        return False
    seen = set()
    for x, y, z in trip:
        for pr in ((x, y), (x, z), (y, z)):
            if pr in seen:
                return False
            seen.add(pr)
    return len(seen) == n * (n - 1) // 2


def _verify_coloring(w, L):
    if not isinstance(L, ListAssignment) or L.host != w.host or L.n != w.n:
        return False
    if set(w.colors) != set(L.lists):
        return False
    used = set()
    for (u, v), c in w.colors.items():
        if c not in L.lists[u, v]:
            return False
        ku = ("a", u, c) if w.host == "bipartite" else (u, c)
        kv = ("b", v, c) if w.host == "bipartite" else (v, c)
        if ku in used or kv in used:
            return False
        used.add(ku)
        used.add(kv)
    return True
