"""Degree-prescribed spanning subgraphs via integral maximum flow.

A spanning subgraph H of a bipartite graph G with d_H(a) = f(a), d_H(b) = g(b)
exists iff the network source -> a (capacity f(a)), a -> b (capacity 1 per
edge), b -> sink (capacity g(b)) carries flow sum(f). The same condition is
equivalent to the cut inequalities

    |E_G(A', B')| >= sum_{a in A'} f(a) - sum_{b not in B'} g(b)

for all A' ⊆ A, B' ⊆ B, which :func:`check_hall_all` tests directly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_array
from scipy.sparse.csgraph import maximum_flow

from .errors import InvalidInput
from .graph import BipartiteGraph, EdgeSubset


@dataclass(frozen=True)
class DegreePrescription:
    """Target degrees f on the A-side and g on the B-side."""

    f: tuple
    g: tuple

    def __post_init__(self):
        object.__setattr__(self, "f", tuple(int(x) for x in self.f))
        object.__setattr__(self, "g", tuple(int(x) for x in self.g))
        if any(x < 0 for x in self.f + self.g):
            raise InvalidInput("prescribed degrees must be nonnegative")

    @property
    def balanced(self):
        return sum(self.f) == sum(self.g)

    def to_text(self):
        n = len(self.f)
        lines = [f"{v} {x}" for v, x in enumerate(self.f)]
        lines += [f"{n + v} {x}" for v, x in enumerate(self.g)]
        return "\n".join(lines) + "\n"


def _as_subset(H):
    if isinstance(H, EdgeSubset):
        return H
    if isinstance(H, BipartiteGraph):
        return H.all_edges()
    raise TypeError(f"expected a graph or edge subset, got {type(H).__name__}")


def _validate(H, p):
    if len(p.f) != H.n or len(p.g) != H.n:
        raise InvalidInput(f"prescription covers {len(p.f)}/{len(p.g)} vertices, graph has n={H.n}")
    if not p.balanced:
        raise InvalidInput(f"degree sums differ: {sum(p.f)} != {sum(p.g)}")


def degree_prescribed_subgraph(G, p: DegreePrescription):
    """Spanning subgraph of ``G`` with degrees exactly ``p``, or None.

    ``G`` may be a graph or an edge subset; the result is an edge subset of the
    underlying parent graph. The flow is scipy's Dinic on a network built in
    edge-id order, so the output is deterministic.
    """
    H = _as_subset(G)
    _validate(H, p)
    n = H.n
    parent = H.parent
    need = sum(p.f)
    if need == 0:
        return EdgeSubset(parent, [])
    da, db = H.degrees()
    if any(p.f[v] > da[v] or p.g[v] > db[v] for v in range(n)):
        return None
    f = np.asarray(p.f, dtype=np.int32)
    g = np.asarray(p.g, dtype=np.int32)
    ea = parent.a[H.ids]
    eb = parent.b[H.ids]
    live = (f[ea] > 0) & (g[eb] > 0)
    src, sink = 2 * n, 2 * n + 1
    va, vb = np.flatnonzero(f), np.flatnonzero(g)
    rows = np.concatenate([np.full(len(va), src), ea[live], n + vb])
    cols = np.concatenate([va, n + eb[live], np.full(len(vb), sink)])
    caps = np.concatenate([f[va], np.ones(int(live.sum()), np.int32), g[vb]]).astype(np.int32)
    net = csr_array((caps, (rows, cols)), shape=(2 * n + 2, 2 * n + 2))
    res = maximum_flow(net, src, sink, method="dinic")
    if res.flow_value != need:
        return None
    flow = res.flow.tocsr()
    used = np.asarray(flow[ea[live], n + eb[live]]).ravel() > 0
    return EdgeSubset(parent, H.ids[live][used])


def hall_deficiency(G, p: DegreePrescription, Aset, Bset) -> int:
    """sum_{a in A'} f(a) - sum_{b not in B'} g(b)."""
    n = G.n
    Aset, Bset = set(Aset), set(Bset)
    if any(not 0 <= v < n for v in Aset | Bset):
        raise InvalidInput("vertex subset out of range")
    return sum(p.f[a] for a in Aset) - sum(p.g[b] for b in range(n) if b not in Bset)


def subset_indicators(n: int) -> np.ndarray:
    """Row k is the 0/1 indicator of the subset of [n] with bitmask k."""
    k = np.arange(1 << n)
    return ((k[:, None] >> np.arange(n)) & 1).astype(np.int64)


def _bits(mask, n):
    return frozenset(i for i in range(n) if mask >> i & 1)


def check_hall_all(G, p: DegreePrescription, budget=None, seed=None):
    """A pair (A', B') violating the cut inequality, or None.

    Exhaustive over all 4^n pairs when ``budget`` is None (n <= 12); otherwise
    ``budget`` uniformly random pairs are probed and a violation is reported
    only if found.
    """
    H = _as_subset(G)
    _validate(H, p)
    n = H.n
    M = H.adjacency()
    f = np.asarray(p.f, dtype=np.int64)
    g = np.asarray(p.g, dtype=np.int64)
    if budget is None:
        if n > 12:
            raise InvalidInput("exhaustive Hall check needs n <= 12; pass a budget")
        ind = subset_indicators(n)
        fa = ind @ f  # sum over A'
        g_out = g.sum() - ind @ g  # sum over b not in B'
        rows = ind @ M  # row k: edges from A'_k to each b
        chunk = max(1, (1 << 22) >> n)
        for start in range(0, ind.shape[0], chunk):
            e = rows[start:start + chunk] @ ind.T
            bad = e < fa[start:start + chunk, None] - g_out[None, :]
            if bad.any():
                i, j = np.argwhere(bad)[0]
                return _bits(start + int(i), n), _bits(int(j), n)
        return None
    rng = np.random.default_rng(seed)
    for _ in range(int(budget)):
        ia = rng.random(n) < 0.5
        ib = rng.random(n) < 0.5
        e = int(ia.astype(np.int64) @ M @ ib.astype(np.int64))
        if e < int(f[ia].sum()) - int(g[~ib].sum()):
            return frozenset(np.flatnonzero(ia).tolist()), frozenset(np.flatnonzero(ib).tolist())
    return None


def complete_within(K: EdgeSubset, Hplus: EdgeSubset, d: int):
    """A d-regular R with K ⊆ R ⊆ K ∪ Hplus, or None if none exists."""
    if K.parent is not Hplus.parent:
        raise InvalidInput("K and Hplus must share a parent graph")
    if not K.isdisjoint(Hplus):
        raise InvalidInput("K and Hplus must be disjoint")
    da, db = K.degrees()
    top = int(max(da.max(initial=0), db.max(initial=0)))
    if d < top:
        raise InvalidInput(f"target degree {d} below max degree {top} of K")
    p = DegreePrescription(tuple((d - da).tolist()), tuple((d - db).tolist()))
    F = degree_prescribed_subgraph(Hplus, p)
    if F is None:
        return None
    return K.union(F)
