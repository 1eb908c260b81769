"""Bipartite graphs, edge subsets, triple systems and list assignments.

Vertices are plain indices. For a bipartite graph with parts of size ``n``
the A-side is ``0..n-1`` and the B-side is ``0..n-1`` as well; functions that
take a single vertex use the flat convention ``v < n`` for A-vertex ``v`` and
``v >= n`` for B-vertex ``v - n``.

Edge identifiers are positions in the lexicographically sorted edge list and
stay fixed when taking subsets.
"""
from __future__ import annotations

import io
from typing import Iterable

import numpy as np

from .errors import InvalidInput


def _frozen(arr):
    arr = np.ascontiguousarray(arr, dtype=np.int64)
    arr.setflags(write=False)
    return arr


class BipartiteGraph:
    """Bipartite graph on parts A = [0, n), B = [0, n) with stable edge ids."""

    __slots__ = ("n", "a", "b", "_lookup")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]]):
        if n < 0:
            raise InvalidInput(f"part size must be nonnegative, got {n}")
        arr = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise InvalidInput("edge endpoint out of range")
        keys = arr[:, 0] * max(n, 1) + arr[:, 1]
        order = np.argsort(keys, kind="stable")
        keys = keys[order]
        if keys.size > 1 and np.any(keys[1:] == keys[:-1]):
            raise InvalidInput("duplicate edge")
        arr = arr[order]
        self.n = int(n)
        self.a = _frozen(arr[:, 0])
        self.b = _frozen(arr[:, 1])
        self._lookup = None

    @classmethod
    def _from_sorted(cls, n, a, b):
        g = cls.__new__(cls)
        g.n = int(n)
        g.a = _frozen(a)
        g.b = _frozen(b)
        g._lookup = None
        return g

    @property
    def m(self) -> int:
        return int(self.a.size)

    def __len__(self):
        return self.m

    def __repr__(self):
        return f"BipartiteGraph(n={self.n}, m={self.m})"

    def __eq__(self, other):
        return (
            isinstance(other, BipartiteGraph)
            and self.n == other.n
            and np.array_equal(self.a, other.a)
            and np.array_equal(self.b, other.b)
        )

    def __hash__(self):
        return hash((self.n, self.a.tobytes(), self.b.tobytes()))

    def edges(self) -> list[tuple[int, int]]:
        return list(zip(self.a.tolist(), self.b.tolist()))

    def edge_id(self, a: int, b: int) -> int:
        if self._lookup is None:
            self._lookup = {e: i for i, e in enumerate(self.edges())}
        try:
            return self._lookup[(a, b)]
        except KeyError:
            raise InvalidInput(f"({a}, {b}) is not an edge") from None

    def all_edges(self) -> "EdgeSubset":
        return EdgeSubset(self, np.arange(self.m))

    def subset(self, ids) -> "EdgeSubset":
        return EdgeSubset(self, ids)

    def adjacency(self, ids=None) -> np.ndarray:
        """Dense n x n 0/1 matrix of the given edge ids (default: all)."""
        mat = np.zeros((self.n, self.n), dtype=np.int64)
        if ids is None:
            mat[self.a, self.b] = 1
        else:
            mat[self.a[ids], self.b[ids]] = 1
        return mat

    def degrees(self, ids=None) -> tuple[np.ndarray, np.ndarray]:
        a = self.a if ids is None else self.a[ids]
        b = self.b if ids is None else self.b[ids]
        return (np.bincount(a, minlength=self.n), np.bincount(b, minlength=self.n))


class EdgeSubset:
    """A set of edge ids of a parent :class:`BipartiteGraph`."""

    __slots__ = ("parent", "ids")

    def __init__(self, parent: BipartiteGraph, ids):
        ids = np.unique(np.asarray(ids, dtype=np.int64))
        if ids.size and (ids[0] < 0 or ids[-1] >= parent.m):
            raise InvalidInput("edge id outside parent graph")
        self.parent = parent
        self.ids = _frozen(ids)

    @classmethod
    def from_mask(cls, parent, mask):
        s = cls.__new__(cls)
        s.parent = parent
        s.ids = _frozen(np.flatnonzero(mask))
        return s

    @property
    def n(self):
        return self.parent.n

    def __len__(self):
        return int(self.ids.size)

    def __iter__(self):
        return iter(self.ids.tolist())

    def __contains__(self, eid):
        i = np.searchsorted(self.ids, eid)
        return bool(i < self.ids.size and self.ids[i] == eid)

    def __eq__(self, other):
        return (
            isinstance(other, EdgeSubset)
            and self.parent is other.parent
            and np.array_equal(self.ids, other.ids)
        )

    def __hash__(self):
        return hash((id(self.parent), self.ids.tobytes()))

    def __repr__(self):
        return f"EdgeSubset(n={self.n}, size={len(self)})"

    def mask(self) -> np.ndarray:
        out = np.zeros(self.parent.m, dtype=bool)
        out[self.ids] = True
        return out

    def _check(self, other):
        if other.parent is not self.parent:
            raise InvalidInput("edge subsets of different graphs")

    def union(self, other):
        self._check(other)
        return EdgeSubset(self.parent, np.union1d(self.ids, other.ids))

    def intersection(self, other):
        self._check(other)
        return EdgeSubset(self.parent, np.intersect1d(self.ids, other.ids))

    def difference(self, other):
        self._check(other)
        return EdgeSubset(self.parent, np.setdiff1d(self.ids, other.ids))

    def issubset(self, other):
        self._check(other)
        return bool(np.isin(self.ids, other.ids).all())

    def isdisjoint(self, other):
        self._check(other)
        return np.intersect1d(self.ids, other.ids).size == 0

    def degrees(self):
        return self.parent.degrees(self.ids)

    def edges(self):
        return list(zip(self.parent.a[self.ids].tolist(), self.parent.b[self.ids].tolist()))

    def adjacency(self):
        return self.parent.adjacency(self.ids)

    def as_graph(self) -> BipartiteGraph:
        """The subset as a standalone graph.

        Local edge ``k`` corresponds to parent edge ``self.ids[k]`` because the
        parent ids are already in lexicographic order.
        """
        return BipartiteGraph._from_sorted(self.n, self.parent.a[self.ids], self.parent.b[self.ids])


def complete_bipartite(n: int) -> BipartiteGraph:
    if n < 1:
        raise InvalidInput("n must be at least 1")
    a, b = np.divmod(np.arange(n * n), n)
    return BipartiteGraph._from_sorted(n, a, b)


def degrees(H) -> tuple[np.ndarray, np.ndarray]:
    """Degree vectors (A-side, B-side) of a graph or edge subset."""
    return H.degrees()


def degree(H, v: int) -> int:
    """Degree of flat vertex ``v`` (A-vertex if ``v < n``, else B-vertex ``v - n``)."""
    n = H.n
    if not 0 <= v < 2 * n:
        raise InvalidInput(f"vertex {v} out of range for n={n}")
    da, db = H.degrees()
    return int(da[v] if v < n else db[v - n])


def _edge_arrays(H):
    if isinstance(H, EdgeSubset):
        return H.parent.a[H.ids], H.parent.b[H.ids]
    return H.a, H.b


def _indicator(n, vertices):
    ind = np.zeros(n, dtype=bool)
    vs = list(vertices)
    if vs:
        vs = np.asarray(vs, dtype=np.int64)
        if vs.min() < 0 or vs.max() >= n:
            raise InvalidInput("vertex subset out of range")
        ind[vs] = True
    return ind


def edges_between(H, Aset, Bset) -> int:
    """|{(a, b) in H : a in Aset, b in Bset}|."""
    a, b = _edge_arrays(H)
    ia = _indicator(H.n, Aset)
    ib = _indicator(H.n, Bset)
    return int(np.count_nonzero(ia[a] & ib[b]))


def is_regular(H):
    """Common degree of all 2n vertices, or None if they disagree."""
    da, db = H.degrees()
    if H.n == 0:
        return 0
    d = int(da[0])
    if np.all(da == d) and np.all(db == d):
        return d
    return None


# ---------------------------------------------------------------------------
# triple systems and list assignments


class TripleSystem:
    """3-uniform hypergraph; ``tripartite`` mode has one vertex per part of size n."""

    __slots__ = ("mode", "n", "triples")

    MODES = ("tripartite", "plain")

    def __init__(self, mode: str, n: int, triples: Iterable[tuple[int, int, int]]):
        if mode not in self.MODES:
            raise InvalidInput(f"unknown triple system mode {mode!r}")
        out = []
        for t in triples:
            t = tuple(int(x) for x in t)
            if len(t) != 3 or min(t) < 0 or max(t) >= n:
                raise InvalidInput(f"bad triple {t} for n={n}")
            if mode == "plain":
                if len(set(t)) != 3:
                    raise InvalidInput(f"plain triple {t} has repeated vertices")
                t = tuple(sorted(t))
            out.append(t)
        out.sort()
        for x, y in zip(out, out[1:]):
            if x == y:
                raise InvalidInput(f"duplicate triple {x}")
        self.mode = mode
        self.n = int(n)
        self.triples = tuple(out)

    def __len__(self):
        return len(self.triples)

    def __iter__(self):
        return iter(self.triples)

    def __eq__(self, other):
        return (
            isinstance(other, TripleSystem)
            and (self.mode, self.n, self.triples) == (other.mode, other.n, other.triples)
        )

    def __hash__(self):
        return hash((self.mode, self.n, self.triples))

    def __repr__(self):
        return f"TripleSystem({self.mode!r}, n={self.n}, size={len(self)})"


class ListAssignment:
    """Color lists on the edges of K_{n,n} (``bipartite``) or K_n (``complete``).

    For the complete host ``n`` is the number of vertices and edges are pairs
    ``u < v``.
    """

    __slots__ = ("host", "n", "k", "n_colors", "lists")

    HOSTS = ("bipartite", "complete")

    def __init__(self, host: str, n: int, k: int, n_colors: int, lists: dict):
        if host not in self.HOSTS:
            raise InvalidInput(f"unknown host {host!r}")
        expected = set(host_edges(host, n))
        if set(lists) != expected:
            raise InvalidInput("lists must be given for exactly the host edges")
        clean = {}
        for e in sorted(lists):
            cols = tuple(sorted(int(c) for c in lists[e]))
            if len(cols) != k or len(set(cols)) != k:
                raise InvalidInput(f"list of {e} does not have {k} distinct colors")
            if cols and (cols[0] < 0 or cols[-1] >= n_colors):
                raise InvalidInput(f"color out of range in list of {e}")
            clean[e] = cols
        self.host = host
        self.n = int(n)
        self.k = int(k)
        self.n_colors = int(n_colors)
        self.lists = clean

    def __eq__(self, other):
        return isinstance(other, ListAssignment) and (
            self.host, self.n, self.k, self.n_colors, self.lists
        ) == (other.host, other.n, other.k, other.n_colors, other.lists)

    def __repr__(self):
        return f"ListAssignment({self.host!r}, n={self.n}, k={self.k}, colors={self.n_colors})"


def host_edges(host: str, n: int) -> list[tuple[int, int]]:
    if host == "bipartite":
        return [(a, b) for a in range(n) for b in range(n)]
    if host == "complete":
        return [(u, v) for u in range(n) for v in range(u + 1, n)]
    raise InvalidInput(f"unknown host {host!r}")


# ---------------------------------------------------------------------------
# text formats


def _lines(text):
    return [ln.split() for ln in text.splitlines() if ln.strip()]


def graph_to_text(G: BipartiteGraph) -> str:
    buf = io.StringIO()
    buf.write(f"{G.n} {G.m}\n")
    for a, b in G.edges():
        buf.write(f"{a} {b}\n")
    return buf.getvalue()


def graph_from_text(text: str) -> BipartiteGraph:
    rows = _lines(text)
    if not rows or len(rows[0]) != 2:
        raise InvalidInput("graph header must be 'n m'")
    n, m = int(rows[0][0]), int(rows[0][1])
    body = rows[1:]
    if len(body) != m:
        raise InvalidInput(f"expected {m} edge lines, found {len(body)}")
    return BipartiteGraph(n, [(int(x), int(y)) for x, y in body])


def triples_to_text(T: TripleSystem) -> str:
    buf = io.StringIO()
    buf.write(f"{T.mode} {T.n}\n")
    for x, y, z in T.triples:
        buf.write(f"{x} {y} {z}\n")
    return buf.getvalue()


def triples_from_text(text: str) -> TripleSystem:
    rows = _lines(text)
    if not rows or len(rows[0]) != 2:
        raise InvalidInput("triple system header must be 'mode n'")
    return TripleSystem(rows[0][0], int(rows[0][1]), [tuple(map(int, r)) for r in rows[1:]])


def lists_to_text(L: ListAssignment) -> str:
    buf = io.StringIO()
    buf.write(f"{L.host} {L.n} {L.k} {L.n_colors}\n")
    for (u, v), cols in L.lists.items():
        buf.write(" ".join(map(str, (u, v) + cols)) + "\n")
    return buf.getvalue()


def lists_from_text(text: str) -> ListAssignment:
    rows = _lines(text)
    if not rows or len(rows[0]) != 4:
        raise InvalidInput("list assignment header must be 'host n k N_colors'")
    host, n, k, nc = rows[0][0], int(rows[0][1]), int(rows[0][2]), int(rows[0][3])
    lists = {}
    for r in rows[1:]:
        vals = list(map(int, r))
        lists[(vals[0], vals[1])] = vals[2:]
    return ListAssignment(host, n, k, nc, lists)
