"""Empirical and exact spread of distributions over edge sets.

A distribution mu on edge sets W is p-spread when mu(T ⊆ W) <= 2 p^{|T|} for
every edge set T. Reports give, per test set T, the empirical probability, its
ratio to p^{|T|} (the factor 2 is applied only when flagging) and the binomial
standard error.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidInput
from .graph import EdgeSubset

SPREAD_FLAG = 2.0
CSV_FIELDS = ("test_id", "size", "empirical_prob", "ratio", "stderr")


@dataclass
class SpreadTest:
    edges: tuple
    prob: float
    ratio: float
    stderr: float

    @property
    def size(self):
        return len(self.edges)


@dataclass
class SpreadReport:
    p: float
    tests: list
    samples: int
    max_ratio: float = field(init=False)

    def __post_init__(self):
        self.max_ratio = max((t.ratio for t in self.tests), default=0.0)

    @property
    def flagged(self):
        """Tests whose ratio exceeds the definitional factor 2."""
        return [t for t in self.tests if t.ratio > SPREAD_FLAG]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for k, t in enumerate(self.tests):
            w.writerow([k, t.size, f"{t.prob:.8f}", f"{t.ratio:.8f}", f"{t.stderr:.8f}"])
        return buf.getvalue()


def _ids(draw):
    if isinstance(draw, EdgeSubset):
        return draw.ids
    return np.asarray(list(draw) if not isinstance(draw, np.ndarray) else draw, dtype=np.int64)


def containment_counts(draws, tests):
    """counts[k] = number of draws containing every edge of tests[k]."""
    tests = [tuple(int(e) for e in T) for T in tests]
    universe = np.array(sorted({e for T in tests for e in T}), dtype=np.int64)
    col = {e: k for k, e in enumerate(universe.tolist())}
    X = np.array([np.isin(universe, _ids(d)) for d in draws], dtype=bool).reshape(-1, len(universe))
    counts = np.empty(len(tests), dtype=np.int64)
    for k, T in enumerate(tests):
        counts[k] = X[:, [col[e] for e in T]].all(axis=1).sum() if T else X.shape[0]
    return counts


def report_from_counts(p, tests, counts, samples) -> SpreadReport:
    out = []
    for T, c in zip(tests, counts):
        prob = int(c) / samples
        base = p ** len(T)
        ratio = prob / base if base > 0 else (0.0 if prob == 0 else math.inf)
        out.append(SpreadTest(tuple(int(e) for e in T), prob, ratio, math.sqrt(prob * (1 - prob) / samples)))
    return SpreadReport(p, out, samples)


def trial_rngs(seed, trials):
    """Independent per-trial generators derived from ``seed``."""
    for t in range(trials):
        yield np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(t,)))


def estimate_spread(sampler, p, tests, trials, seed=None, chunk=4096) -> SpreadReport:
    """Empirical spread of ``sampler`` against ``p`` on the given test sets.

    ``sampler(rng)`` returns an EdgeSubset or an iterable of edge ids; trial t
    uses its own generator derived from (seed, t).
    """
    if trials < 1:
        raise InvalidInput("trials must be >= 1")
    tests = [tuple(T) for T in tests]
    if not tests:
        raise InvalidInput("need at least one test set")
    counts = np.zeros(len(tests), dtype=np.int64)
    batch = []
    for rng in trial_rngs(0 if seed is None else seed, trials):
        batch.append(sampler(rng))
        if len(batch) == chunk:
            counts += containment_counts(batch, tests)
            batch = []
    if batch:
        counts += containment_counts(batch, tests)
    return report_from_counts(p, tests, counts, trials)


def exact_matching_spread(n, T) -> Fraction:
    """Probability that a uniform perfect matching of K_{n,n} contains T: (n-|T|)!/n!."""
    T = [tuple(int(x) for x in e) for e in T]
    A = [a for a, _ in T]
    B = [b for _, b in T]
    if len(set(A)) != len(A) or len(set(B)) != len(B) or any(not (0 <= v < n) for v in A + B):
        raise InvalidInput(f"{T} is not a partial matching of K_{{{n},{n}}}")
    return Fraction(1, math.perm(n, len(T)))


def uniform_matching_sampler(n):
    """Sampler of uniform perfect matchings of K_{n,n}, as edge ids a*n + b."""
    base = np.arange(n) * n

    def draw(rng):
        return base + rng.permutation(n)

    return draw


def p_small_weight(cover, p) -> float:
    """sum over G in cover of p^{|G|}; a cover with weight < 1/2 witnesses p-smallness."""
    if not 0 <= p <= 1:
        raise InvalidInput("p must lie in [0, 1]")
    if p == 0:
        return float(sum(1 for G in cover if len(G) == 0))
    lp = math.log(p)
    return math.fsum(math.exp(len(G) * lp) for G in cover)


def default_tests(G, rng, n_vertices=3, n_pairs=50, n_triples=20):
    """Singletons at a few vertices, random pairs (half sharing a vertex) and triples.

    Returned as tuples of edge ids of G.
    """
    rng = np.random.default_rng(rng)
    n, m = G.n, G.m
    tests = []
    verts = rng.choice(2 * n, size=min(n_vertices, 2 * n), replace=False)
    for v in sorted(verts.tolist()):
        ids = np.flatnonzero(G.a == v) if v < n else np.flatnonzero(G.b == v - n)
        tests += [(int(e),) for e in ids]
    seen = set()
    while len(seen) < n_pairs and m >= 2:
        e = int(rng.integers(m))
        if len(seen) % 2:
            f = int(rng.integers(m))
        else:
            nb = np.flatnonzero((G.a == G.a[e]) | (G.b == G.b[e]))
            f = int(rng.choice(nb))
        if e != f:
            seen.add(tuple(sorted((e, f))))
    tests += sorted(seen)
    trip = set()
    while len(trip) < n_triples and m >= 3:
        trip.add(tuple(sorted(rng.choice(m, size=3, replace=False).tolist())))
    tests += sorted(trip)
    return tests


def decomposition_part_reports(G, r, sched, tests, trials, seed=0, p=None, **recurse_kw):
    """Spread reports of part j of ``recurse(G, r, ...)`` for every j.

    One decomposition is drawn per trial (seed derived from (seed, t)) and all
    S**r parts are scored against the same draws. ``p`` defaults to
    D_r / n.
    """
    from .decompose import recurse

    if trials < 1:
        raise InvalidInput("trials must be >= 1")
    tests = [tuple(T) for T in tests]
    S = sched.S
    n_parts = S**r
    p = float(sched.D(r)) / G.n if p is None else p
    counts = np.zeros((n_parts, len(tests)), dtype=np.int64)
    universe = np.array(sorted({e for T in tests for e in T}), dtype=np.int64)
    cols = [np.searchsorted(universe, np.asarray(T, dtype=np.int64)) for T in tests]
    for t, rng in enumerate(trial_rngs(seed, trials)):
        dec = recurse(G, r, sched, seed=int(rng.integers(2**63)), **recurse_kw)
        owner = dec.part_of_edge()[universe]
        for k, c in enumerate(cols):
            if len(c) == 0:
                counts[:, k] += 1
                continue
            o = owner[c]
            if np.all(o == o[0]):
                counts[o[0], k] += 1
    return [report_from_counts(p, tests, counts[j], trials) for j in range(n_parts)]
