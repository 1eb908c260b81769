"""Recursive decomposition of a regular bipartite graph into regular parts.

One round takes a D_G-regular graph G and an edge labeling (pi, xi) with
pi(e) uniform in [S] and xi(e) ~ Bernoulli(q_r). The slices H_i = pi^{-1}(i)
are nearly regular; K_i = H_i minus its boosted edges is completed to a
regular R_i inside H_i by a flow, and one slice (the *remainder*) takes
whatever is left. Labelings are drawn from the product measure conditioned on
all slice degrees lying in a window around D_G/S (the R1/R2 events), by
rejection.

Slice indices are 0-based throughout (``0..S-1``).
"""
from __future__ import annotations

import io
import math
from functools import lru_cache
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction

import numpy as np

from .errors import BudgetExhausted, CompletionInfeasible, InvalidInput, ParametersTooSmall
from .flow import complete_within, subset_indicators
from .graph import BipartiteGraph, EdgeSubset, is_regular
from .prob import as_rng

PAPER_CONSTANTS = dict(
    c_R=9.0,
    c_d=1e5,
    c_E1=0.9,
    c_E2=0.5,
    c_E4=4.0,
    kappa=1 / 3,
    c_delta=2.0**10,
    e3_q_factor=1.0,
    q_exponent=1 / 8,
    q_override=None,
)

# Desk-scale defaults, tuned on K_{64,64} with S = 2. The small q exponent keeps
# the unboosted core K_i sparse enough to complete at degrees 8..64; the small
# c_delta makes N1 reject splits that leave a part too thin to split again.
DESK_CONSTANTS = dict(
    c_R=1.25,
    c_d=4.0,
    c_E1=0.5,
    c_E2=2.0,
    c_E4=4.0,
    kappa=1 / 3,
    c_delta=0.2,
    e3_q_factor=1.0,
    q_exponent=1 / 32,
    q_override=None,
)

DESK_EXCELLENCE = 0.9


@dataclass(frozen=True)
class ParamSchedule:
    """Parameters of round ``r`` of the recursion.

    ``D_r = D0 / S**r`` is exact (a Fraction). ``q_r`` is ``D_r**-q_exponent``
    unless ``q_override`` is given (a float for every round or a sequence
    indexed by round). ``delta(r) = c_delta * S * sum_{r' <= r} q_{r'}`` with
    ``delta(-1) = 0``.
    """

    D0: int
    epsilon: float
    S: int
    r: int
    profile: str
    c_R: float
    c_d: float
    c_E1: float
    c_E2: float
    c_E4: float
    kappa: float
    c_delta: float
    e3_q_factor: float
    q_exponent: float
    q_override: object = None
    n_exact: int = 10

    def D(self, r=None) -> Fraction:
        r = self.r if r is None else r
        return Fraction(self.D0) / Fraction(self.S) ** r

    def q(self, r=None) -> float:
        r = self.r if r is None else r
        if self.q_override is not None:
            if isinstance(self.q_override, (int, float)):
                return float(self.q_override)
            return float(self.q_override[r])
        return float(self.D(r)) ** -self.q_exponent

    def delta(self, r=None) -> float:
        r = self.r if r is None else r
        if r < 0:
            return 0.0
        return self.c_delta * self.S * sum(self.q(k) for k in range(r + 1))

    @property
    def D_r(self):
        return self.D()

    @property
    def q_r(self):
        return self.q()

    @property
    def delta_r(self):
        return self.delta()

    @property
    def delta_prev(self):
        return self.delta(self.r - 1)

    def at(self, r: int) -> "ParamSchedule":
        return replace(self, r=r)

    def with_constants(self, **kw) -> "ParamSchedule":
        return replace(self, **kw)

    def window(self, D_G: int) -> float:
        """Half-width c_R * sqrt(log D_G * D_G / S) of the slice degree window."""
        if D_G <= 1:
            return 0.0
        return self.c_R * math.sqrt(math.log(D_G) * D_G / self.S)

    def paper_degree_window(self, D_G):
        """The (1 +- 2 S q_r) D_G / S interval for part degrees."""
        c = D_G / self.S
        s = 2 * self.S * self.q()
        return ((1 - s) * c, (1 + s) * c)


def schedule(D0, epsilon=0.25, S=2, r=0, profile="desk", **overrides) -> ParamSchedule:
    if D0 < 1 or S < 1 or r < 0:
        raise InvalidInput("need D0 >= 1, S >= 1, r >= 0")
    if profile == "paper":
        consts = dict(PAPER_CONSTANTS)
    elif profile == "desk":
        consts = dict(DESK_CONSTANTS)
    else:
        raise InvalidInput(f"unknown profile {profile!r}")
    unknown = set(overrides) - set(consts) - {"n_exact"}
    if unknown:
        raise InvalidInput(f"unknown schedule constants {sorted(unknown)}")
    consts.update(overrides)
    sched = ParamSchedule(D0=int(D0), epsilon=float(epsilon), S=int(S), r=int(r), profile=profile, **consts)
    q = sched.q()
    if not 0 < q <= 1:
        raise ParametersTooSmall(f"q_r = {q} outside (0, 1]")
    if profile == "desk" and q * sched.D() / S < 1:
        raise ParametersTooSmall(f"q_r * D_r / S = {q * float(sched.D()) / S:.3g} < 1")
    return sched


# ---------------------------------------------------------------------------
# labelings


@dataclass
class EdgeLabeling:
    pi: np.ndarray
    xi: np.ndarray
    seed: object = None
    attempts: int = 1

    def __len__(self):
        return len(self.pi)


def _regular_degree(G):
    d = is_regular(G)
    if d is None:
        raise InvalidInput("graph is not regular")
    return d


def sample_labeling(G: BipartiteGraph, sched: ParamSchedule, seed=None) -> EdgeLabeling:
    """Independent pi(e) uniform in [S] and xi(e) ~ Bernoulli(q_r) per edge."""
    rng = as_rng(seed)
    pi = rng.integers(sched.S, size=G.m)
    xi = rng.random(G.m) < sched.q()
    return EdgeLabeling(pi, xi, seed)


def slice_degrees(G, labeling, S):
    """(n, S) degree tables of H_i and H_i^+ on each side."""
    n = G.n
    ka = G.a * S + labeling.pi
    kb = G.b * S + labeling.pi
    xi = labeling.xi
    ha = np.bincount(ka, minlength=n * S).reshape(n, S)
    hb = np.bincount(kb, minlength=n * S).reshape(n, S)
    pa = np.bincount(ka[xi], minlength=n * S).reshape(n, S)
    pb = np.bincount(kb[xi], minlength=n * S).reshape(n, S)
    return ha, hb, pa, pb


def _degree_window_ok(G, labeling, sched, D_G):
    ha, hb, pa, pb = slice_degrees(G, labeling, sched.S)
    w = sched.window(D_G) + 1e-9
    c1 = D_G / sched.S
    c2 = sched.q() * D_G / sched.S
    return (
        np.abs(ha - c1).max() <= w
        and np.abs(hb - c1).max() <= w
        and np.abs(pa - c2).max() <= w
        and np.abs(pb - c2).max() <= w
    )


def _batch_window_ok(G, pi, xi, sched, D_G):
    """Row mask of labelings (rows of pi, xi) meeting every R1/R2 window."""
    k, m = pi.shape
    n, S = G.n, sched.S
    w = sched.window(D_G) + 1e-9
    c1 = D_G / S
    c2 = sched.q() * D_G / S
    base = (np.arange(k) * (n * S))[:, None]
    ok = np.ones(k, dtype=bool)
    for side in (G.a, G.b):
        key = base + side * S + pi
        h = np.bincount(key.ravel(), minlength=k * n * S).reshape(k, n * S)
        ok &= np.abs(h - c1).max(axis=1) <= w
        p = np.bincount(key[xi], minlength=k * n * S).reshape(k, n * S)
        ok &= np.abs(p - c2).max(axis=1) <= w
    return ok


def condition_labeling(G, sched, seed=None, max_attempts=10**6, max_batch=64) -> EdgeLabeling:
    """A labeling from the product measure conditioned on the R1/R2 windows.

    Rejection sampling: product labelings are drawn until every vertex has
    ``|d_{H_i}(v) - D_G/S| <= w`` and ``|d_{H_i^+}(v) - q_r D_G/S| <= w`` for all
    slices, ``w = c_R sqrt(log D_G * D_G / S)``. Candidates are generated in
    batches (doubling up to ``max_batch``) and the first accepted one in draw
    order is returned, so the law is exactly the conditional one.
    """
    rng = as_rng(seed)
    D_G = _regular_degree(G)
    q = sched.q()
    attempts = 0
    batch = 1
    while attempts < max_attempts:
        k = min(batch, max_attempts - attempts)
        pi = rng.integers(sched.S, size=(k, G.m))
        xi = rng.random((k, G.m)) < q
        hit = np.flatnonzero(_batch_window_ok(G, pi, xi, sched, D_G))
        if hit.size:
            j = int(hit[0])
            return EdgeLabeling(pi[j], xi[j], seed, attempts + j + 1)
        attempts += k
        batch = min(2 * batch, max_batch)
    raise BudgetExhausted(
        f"degree windows not met in {attempts} attempts", attempts, 1.0 / (attempts + 1)
    )


def slices(G: BipartiteGraph, labeling: EdgeLabeling, S: int):
    """``([(H_0, H_0^+), ..., (H_{S-1}, H_{S-1}^+)], H^+)`` as edge subsets of G."""
    out = []
    for i in range(S):
        h = labeling.pi == i
        out.append((EdgeSubset.from_mask(G, h), EdgeSubset.from_mask(G, h & labeling.xi)))
    return out, EdgeSubset.from_mask(G, labeling.xi)


# ---------------------------------------------------------------------------
# admissibility and niceness


def round_half_up_101(k: int) -> int:
    """1.01 * k rounded to nearest, ties up, in exact arithmetic."""
    return (101 * k + 50) // 100


@lru_cache(maxsize=None)
def family_sizes(kind: str, n: int, S: int) -> tuple:
    """Admissible (|A'|, |B'|) size pairs for one inequality family.

    ``E1`` covers |B'| >= |A'| >= 4n/5, or 4n/5 >= |A'| >= n/S with
    n - |B'| < 1.01|A'|; ``E2`` has |A'| <= n/S, |B'| = 1.01|A'|; ``E3``/``E4``
    have |B'| >= |A'| >= n/S, n - |B'| = 1.01|A'|; ``N2`` is ``E3`` with
    |A'| > n/S.
    """
    out = []
    for a in range(1, n + 1):
        if kind == "E1":
            for b in range(0, n + 1):
                big = b >= a and 5 * a >= 4 * n
                mid = 5 * a <= 4 * n and S * a >= n and 100 * (n - b) < 101 * a
                if big or mid:
                    out.append((a, b))
        elif kind == "E2":
            if S * a <= n:
                out.append((a, min(n, round_half_up_101(a))))
        elif kind in ("E3", "E4", "N2"):
            ok = S * a > n if kind == "N2" else S * a >= n
            b = n - round_half_up_101(a)
            if ok and b >= a:
                out.append((a, b))
        else:
            raise InvalidInput(f"unknown family {kind!r}")
    return tuple(out)


def _pair_table(ind, M):
    """E(A'_j, B'_k) for all subset pairs (float, exact for these sizes)."""
    return (ind @ M) @ ind.T


def _random_subsets(rng, n, sizes):
    order = rng.random((len(sizes), n)).argsort(axis=1)
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(n)[None, :], axis=1)
    return (ranks < np.asarray(sizes)[:, None]).astype(float)


class _Prober:
    """Evaluates E_M(A', B') over either all subset pairs or random probes."""

    def __init__(self, n, exhaustive, rng, budget):
        self.n = n
        self.exhaustive = exhaustive
        self.rng = rng
        self.budget = budget
        self._tables = {}
        if exhaustive:
            self.ind = subset_indicators(n).astype(float)
            self.size = subset_indicators(n).sum(axis=1)
            self.full = (1 << n) - 1

    def pairs(self, kind, S):
        """(XA, XB, sizeA, sizeB) for a family; XB is B' itself (not its complement)."""
        sizes = family_sizes(kind, self.n, S)
        if not sizes:
            return None
        if self.exhaustive:
            ok = np.zeros((len(self.size), len(self.size)), dtype=bool)
            sa, sb = self.size[:, None], self.size[None, :]
            for a, b in sizes:
                ok |= (sa == a) & (sb == b)
            ja, jb = np.nonzero(ok)
            return ja, jb
        pick = self.rng.integers(len(sizes), size=self.budget)
        sa = np.array([sizes[k][0] for k in pick])
        sb = np.array([sizes[k][1] for k in pick])
        return _random_subsets(self.rng, self.n, sa), _random_subsets(self.rng, self.n, sb)

    def count(self, M, sel, complement_b=False, key=None):
        """Edge counts of M over the selected pairs; ``key`` caches exhaustive tables."""
        M = np.asarray(M, dtype=float)
        if self.exhaustive:
            ja, jb = sel
            if complement_b:
                jb = self.full - jb
            table = self._tables.get(key) if key is not None else None
            if table is None:
                table = _pair_table(self.ind, M)
                if key is not None:
                    self._tables[key] = table
            return table[ja, jb]
        XA, XB = sel
        if complement_b:
            XB = 1 - XB
        return ((XA @ M) * XB).sum(axis=1)

    def sizes_of(self, sel):
        if self.exhaustive:
            ja, jb = sel
            return self.size[ja], self.size[jb]
        XA, XB = sel
        return XA.sum(axis=1).astype(np.int64), XB.sum(axis=1).astype(np.int64)

    def witness(self, sel, k):
        if self.exhaustive:
            ja, jb = sel
            A = [v for v in range(self.n) if ja[k] >> v & 1]
            B = [v for v in range(self.n) if jb[k] >> v & 1]
            return tuple(A), tuple(B)
        XA, XB = sel
        return tuple(np.flatnonzero(XA[k]).tolist()), tuple(np.flatnonzero(XB[k]).tolist())

    def n_probes(self, sel):
        return len(sel[0])


@dataclass
class AdmissibilityReport:
    verdicts: dict
    mode: str
    probes: dict
    witnesses: list = field(default_factory=list)

    @property
    def admissible(self) -> bool:
        return all(self.verdicts.values())

    def admissible_except(self, *names) -> bool:
        skip = set(names)
        return all(v for k, v in self.verdicts.items() if k.split("_")[0] not in skip)

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"mode {self.mode}\n")
        buf.write(f"admissible {int(self.admissible)}\n")
        for k in self.verdicts:
            buf.write(f"{k} {int(self.verdicts[k])} probes={self.probes.get(k, 0)}\n")
        for w in self.witnesses:
            buf.write("witness " + " ".join(_fmt(x) for x in w) + "\n")
        return buf.getvalue()


def _fmt(x):
    if isinstance(x, (tuple, list)):
        return "{" + ",".join(map(str, x)) + "}"
    return str(x)


def _choose_mode(mode, n, n_exact):
    if mode == "auto":
        return "exhaustive" if n <= n_exact else "sampled"
    if mode not in ("exhaustive", "sampled"):
        raise InvalidInput(f"unknown mode {mode!r}")
    if mode == "exhaustive" and n > 16:
        raise InvalidInput("exhaustive mode needs n <= 16")
    return mode


def check_admissible(G, labeling, sched, mode="auto", probe_budget=200, seed=None, max_witnesses=5):
    """Check R1, R2 exactly and E1-E4 (both orientations) per slice.

    In sampled mode each family is probed on ``probe_budget`` random pairs:
    a size pair is drawn uniformly from the family's size pairs, then uniform
    subsets of those sizes.
    """
    D_G = _regular_degree(G)
    S, n = sched.S, G.n
    q = sched.q()
    mode = _choose_mode(mode, n, sched.n_exact)
    rng = as_rng(seed)
    verdicts, probes, witnesses = {}, {}, []

    def note(name, ok, wit):
        verdicts[name] = verdicts.get(name, True) and bool(ok)
        if not ok and len(witnesses) < max_witnesses:
            witnesses.append((name,) + tuple(wit))

    # R1 / R2
    ha, hb, pa, pb = slice_degrees(G, labeling, S)
    w = sched.window(D_G) + 1e-9
    for name, ta, tb, centre in (("R1", ha, hb, D_G / S), ("R2", pa, pb, q * D_G / S)):
        verdicts[name] = True
        probes[name] = 2 * n * S
        for side, t in ((0, ta), (n, tb)):
            bad = np.argwhere(np.abs(t - centre) > w)
            for v, i in bad[:max_witnesses]:
                note(name, False, (int(i), int(v) + side))
            if bad.size:
                verdicts[name] = False

    MG = G.adjacency()
    MH, MP = [], []
    for i in range(S):
        h = labeling.pi == i
        MH.append(G.adjacency(np.flatnonzero(h)))
        MP.append(G.adjacency(np.flatnonzero(h & labeling.xi)))

    prober = _Prober(n, mode == "exhaustive", rng, probe_budget)
    base = math.exp(1 + sched.e3_q_factor * q + sched.delta_prev) if sched.delta_prev < 700 else math.inf
    for orient in ("", "_swapped"):
        tr = (lambda M: M.T) if orient else (lambda M: M)
        g = tr(MG)
        hs = [tr(M) for M in MH]
        ps = [tr(M) for M in MP]
        # E1
        sel = prober.pairs("E1", S)
        name = "E1" + orient
        verdicts.setdefault(name, True)
        if sel is not None:
            probes[name] = prober.n_probes(sel)
            eg = prober.count(g, sel, key=("G", orient))
            for i in range(S):
                ep = prober.count(ps[i], sel, key=("P", i, orient))
                bad = np.flatnonzero(ep < sched.c_E1 * eg * q / S - 1e-9)
                for k in bad[:max_witnesses]:
                    note(name, False, (i,) + prober.witness(sel, k))
                if bad.size:
                    verdicts[name] = False
        # E2
        sel = prober.pairs("E2", S)
        name = "E2" + orient
        verdicts.setdefault(name, True)
        if sel is not None:
            probes[name] = prober.n_probes(sel)
            sa, _ = prober.sizes_of(sel)
            for i in range(S):
                ep = prober.count(ps[i], sel, key=("P", i, orient))
                bad = np.flatnonzero(ep > sched.c_E2 * D_G * q / S * sa + 1e-9)
                for k in bad[:max_witnesses]:
                    note(name, False, (i,) + prober.witness(sel, k))
                if bad.size:
                    verdicts[name] = False
        # E3 / E4 share a family; counts are into B \ B'
        sel = prober.pairs("E3", S)
        for prop in ("E3", "E4"):
            verdicts.setdefault(prop + orient, True)
        if sel is not None:
            sa, sb = prober.sizes_of(sel)
            beta = np.maximum(sched.kappa, 1 - sb / n)
            for prop, tag, mats, lim in (
                ("E3", "H", hs, base * D_G * sa * beta / S),
                ("E4", "P", ps, sched.c_E4 * D_G * sa * beta * q / S),
            ):
                name = prop + orient
                probes[name] = prober.n_probes(sel)
                for i in range(S):
                    e = prober.count(mats[i], sel, complement_b=True, key=(tag, i, orient))
                    bad = np.flatnonzero(e > lim + 1e-9)
                    for k in bad[:max_witnesses]:
                        note(name, False, (i,) + prober.witness(sel, k))
                    if bad.size:
                        verdicts[name] = False
    order = ["R1", "R2"] + [p + o for o in ("", "_swapped") for p in ("E1", "E2", "E3", "E4")]
    verdicts = {k: verdicts[k] for k in order}
    return AdmissibilityReport(verdicts, mode, probes, witnesses)


@dataclass
class NicenessReport:
    n1: bool
    n2: bool
    n2_swapped: bool
    mode: str
    degree: object
    probes: int = 0
    witnesses: list = field(default_factory=list)
    edge_lower_bound: object = None

    @property
    def nice(self) -> bool:
        return self.n1 and self.n2 and self.n2_swapped

    def to_text(self) -> str:
        buf = io.StringIO()
        for f in fields(self):
            val = getattr(self, f.name)
            if f.name == "witnesses":
                for w in val:
                    buf.write("witness " + " ".join(_fmt(x) for x in w) + "\n")
            else:
                buf.write(f"{f.name} {val}\n")
        buf.write(f"nice {self.nice}\n")
        return buf.getvalue()


def _is_complete(G):
    return G.m == G.n * G.n


def check_nice(G, r, sched, mode="auto", probe_budget=500, seed=None):
    """Check N1 (degree) and N2 (edges leaving small sets) for round ``r``.

    N2: for |B'| >= |A'| > n/S with n - |B'| = 1.01|A'|,
    ``E_G(A', B \\ B') <= exp(1 + delta_{r-1}) D_G |A'| max(1/3, (n - |B'|)/n)``,
    and the same with the sides swapped. Complete hosts are checked over all
    size pairs with the exact count |A'|(n - |B'|) (``mode == "formula"``).
    """
    sched = sched.at(r)
    D_G = is_regular(G)
    D_r = float(sched.D())
    dprev = sched.delta_prev
    n1 = D_G is not None and D_G > 0 and abs(math.log(D_G / D_r)) <= dprev + 1e-12
    n, S = G.n, sched.S
    sizes = family_sizes("N2", n, S)
    witnesses = []
    if D_G is None:
        return NicenessReport(False, False, False, "skipped", None)
    c = math.exp(1 + dprev) if dprev < 700 else math.inf

    def bound(sa, sb):
        return c * D_G * sa * np.maximum(1 / 3, (n - sb) / n)

    if _is_complete(G) and mode in ("auto", "formula"):
        ok = True
        for a, b in sizes:
            if a * (n - b) > bound(a, b) + 1e-9:
                ok = False
                witnesses.append(("N2", a, b))
        return NicenessReport(n1, ok, ok, "formula", D_G, len(sizes), witnesses)

    mode = _choose_mode(mode, n, sched.n_exact)
    prober = _Prober(n, mode == "exhaustive", as_rng(seed), probe_budget)
    MG = G.adjacency()
    res = {}
    probes = 0
    lower = None
    for orient, M in (("", MG), ("_swapped", MG.T)):
        sel = prober.pairs("N2", S)
        ok = True
        if sel is not None:
            probes += prober.n_probes(sel)
            sa, sb = prober.sizes_of(sel)
            e = prober.count(M, sel, complement_b=True, key=orient)
            bad = np.flatnonzero(e > bound(sa, sb) + 1e-9)
            ok = bad.size == 0
            for k in bad[:5]:
                witnesses.append(("N2" + orient,) + prober.witness(sel, k))
        res[orient] = ok
        if mode == "exhaustive":
            sel = prober.pairs("E1", S)
            if sel is not None:
                sa, _ = prober.sizes_of(sel)
                good = bool(np.all(prober.count(M, sel, key=orient) >= D_G * sa / 100 - 1e-9))
                lower = good if lower is None else (lower and good)
    return NicenessReport(n1, res[""], res["_swapped"], mode, D_G, probes, witnesses, lower)


# ---------------------------------------------------------------------------
# one round and the recursion


@dataclass
class RoundResult:
    """The S regular parts of one round, in slice order."""

    parts: list
    degrees: list
    remainder: int
    candidates_tried: int = 0


def completion_candidates(K, H, D_G, sched):
    """Degrees to try for R_i, K ⊆ R_i ⊆ H, closest to the target first.

    The target is ``mean d_K + c_d sqrt((D_G/S) log D_G)``; only degrees in
    ``[max d_K, min d_H]`` can work. With ``c_d = 0`` this is the smallest
    degree not below ``max d_K`` first.
    """
    ka, kb = K.degrees()
    ha, hb = H.degrees()
    lo = int(max(ka.max(initial=0), kb.max(initial=0)))
    hi = int(min(ha.min(), hb.min())) if K.n else 0
    n = K.n
    mean = float(ka.sum()) / n if n else 0.0
    pad = sched.c_d * math.sqrt(D_G / sched.S * math.log(D_G)) if D_G > 1 else 0.0
    target = mean + pad
    return sorted(range(lo, hi + 1), key=lambda d: (abs(d - target), d))


def decompose_once(G, labeling, sched, remainder=None, max_candidates=None) -> RoundResult:
    """Split a regular G into S regular parts from a labeling.

    For every slice i other than ``remainder`` (default: the last), R_i is a
    regular graph with H_i minus H_i^+ ⊆ R_i ⊆ H_i found by flow; the remainder
    part is everything else.
    """
    D_G = _regular_degree(G)
    S = sched.S
    rem = S - 1 if remainder is None else int(remainder)
    if not 0 <= rem < S:
        raise InvalidInput(f"remainder slice {rem} outside [0, {S})")
    sl, _ = slices(G, labeling, S)
    parts = [None] * S
    used = np.zeros(G.m, dtype=bool)
    tried = 0
    for i, (H, Hp) in enumerate(sl):
        if i == rem:
            continue
        K = H.difference(Hp)
        R = None
        cands = completion_candidates(K, H, D_G, sched)
        if max_candidates is not None:
            cands = cands[:max_candidates]
        for d in cands:
            tried += 1
            R = complete_within(K, Hp, d)
            if R is not None:
                break
        if R is None:
            raise CompletionInfeasible(f"no regular completion of slice {i}", i)
        parts[i] = R
        used[R.ids] = True
    parts[rem] = EdgeSubset.from_mask(G, ~used)
    degs = []
    for P in parts:
        d = is_regular(P)
        if d is None:  # cannot happen when G is regular
            raise CompletionInfeasible("remainder part is not regular", rem)
        degs.append(d)
    return RoundResult(parts, degs, rem, tried)


def sandwich_holds(G, labeling, result: RoundResult, S) -> dict:
    """Independent re-check of one round: partition, regularity, inclusions."""
    sl, Hplus = slices(G, labeling, S)
    cover = np.zeros(G.m, dtype=np.int64)
    for P in result.parts:
        cover[P.ids] += 1
    out = {"P1": bool(np.all(cover == 1)), "regular": all(is_regular(P) is not None for P in result.parts)}
    p2 = p3 = True
    for i, (H, Hp) in enumerate(sl):
        R = result.parts[i]
        if i == result.remainder:
            p3 = H.issubset(R) and R.issubset(H.union(Hplus))
        else:
            p2 = p2 and H.difference(Hp).issubset(R) and R.issubset(H)
    out["P2"] = bool(p2)
    out["P3"] = bool(p3)
    return out


@dataclass
class Decomposition:
    """Parts of E(G0) after ``r`` rounds; ``lineage[k] = (parent_index, slice_index)``."""

    graph: BipartiteGraph
    parts: list
    r: int
    schedule: ParamSchedule
    lineage: list
    retries: int = 0
    checks: list = field(default_factory=list)
    # (t, k) -> Split for every accepted split of the recursion
    splits: dict = field(default_factory=dict)

    @property
    def degrees(self):
        return [is_regular(P) for P in self.parts]

    def part_of_edge(self) -> np.ndarray:
        """Part index of every edge of the root graph."""
        out = np.full(self.graph.m, -1, dtype=np.int64)
        for k, P in enumerate(self.parts):
            out[P.ids] = k
        return out

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"{self.graph.n} {self.schedule.D0} {self.schedule.S} {self.r}\n")
        for k, ((parent, sl), d) in enumerate(zip(self.lineage, self.degrees)):
            buf.write(f"{k} {parent} {sl} {d}\n")
        for P in self.parts:
            buf.write(" ".join(map(str, P.ids.tolist())) + "\n")
        return buf.getvalue()


@dataclass
class Split:
    """One accepted split: parent part ids (in the root graph), its labeling over
    those ids (position j labels edge ids[j]) and the remainder slice."""

    ids: np.ndarray
    pi: np.ndarray
    xi: np.ndarray
    remainder: int


def _child_rng(seed, *key):
    ss = np.random.SeedSequence(entropy=0 if seed is None else seed, spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def degree_is_nice(D, sched, r):
    """N1 for round ``r``: D within a factor exp(delta_{r-1}) of D_r."""
    if D is None or D <= 0:
        return False
    return abs(math.log(D / float(sched.D(r)))) <= sched.delta(r - 1) + 1e-12


def split_part(
    G, sched, rng, check="auto", probe_budget=100, max_retries=200, max_attempts=10**5, randomize_remainder=True,
    nice_parts=True,
):
    """Condition, check and decompose one regular graph, retrying on failure.

    Returns ``(RoundResult, labeling, retries)``. A labeling is rejected when
    some slice has no regular completion, when (``nice_parts``) a part degree
    fails N1 for the next round, or when it is not admissible
    (``check != "none"``). The cheap tests run first; the accepted law is the
    same in any order.
    """
    last = None
    for retry in range(max_retries):
        lab = condition_labeling(G, sched, rng, max_attempts=max_attempts)
        rem = int(rng.integers(sched.S)) if randomize_remainder else None
        try:
            res = decompose_once(G, lab, sched, remainder=rem)
        except CompletionInfeasible as exc:
            last = exc
            continue
        if nice_parts and not all(degree_is_nice(d, sched, sched.r + 1) for d in res.degrees):
            last = CompletionInfeasible(f"part degrees {res.degrees} fail N1", -1)
            continue
        if check != "none":
            rep = check_admissible(G, lab, sched, mode=check, probe_budget=probe_budget, seed=rng)
            if not rep.admissible:
                last = rep
                continue
        return res, lab, retry
    if isinstance(last, CompletionInfeasible):
        raise CompletionInfeasible(f"{max_retries} labelings gave no regular completion", last.slice_index)
    raise BudgetExhausted(f"no admissible labeling in {max_retries} retries", max_retries)


def recurse(G0, r_target, sched_root, seed=None, check="auto", probe_budget=100, max_retries=20,
            max_attempts=10**4, randomize_remainder=True, nice_parts=True, verify=True,
            max_backtracks=20) -> Decomposition:
    """Decompose G0 into S**r_target regular parts by repeated rounds.

    Part ``k`` of round t+1 is slice ``k % S`` of part ``k // S`` of round t.
    The tree is built depth first: when some descendant of a split cannot be
    split itself (no admissible labeling or no regular completion within the
    retry caps), the split is redrawn, up to ``max_backtracks`` times per node.
    This realizes the split law conditioned on every descendant being
    splittable. With ``nice_parts`` a split is also rejected when a part that
    will be split again fails N1 for its round. Each attempt draws from its own seed stream keyed by
    (seed, path, attempt), so the output depends only on the arguments. With
    ``randomize_remainder`` the slice that absorbs leftover edges is chosen
    uniformly at random, which makes the joint law invariant under relabeling
    slices.
    """
    if is_regular(G0) is None:
        raise InvalidInput("root graph must be regular")
    if r_target < 0:
        raise InvalidInput("r_target must be >= 0")
    S = sched_root.S
    stats = {"retries": 0, "backtracks": 0}
    last_error = [None]

    def build(ids, t, path):
        if t == r_target:
            return [(ids, path)], []
        local = EdgeSubset(G0, ids).as_graph() if t else G0
        sched = sched_root.at(t)
        for bt in range(max_backtracks):
            rng = _child_rng(seed, len(path), *path, bt)
            try:
                res, lab, tries = split_part(local, sched, rng, check, probe_budget, max_retries,
                                             max_attempts, randomize_remainder,
                                             nice_parts and t + 1 < r_target)
            except (CompletionInfeasible, BudgetExhausted) as exc:
                last_error[0] = (t, path, exc)
                stats["backtracks"] += 1
                continue
            stats["retries"] += tries
            leaves, checks = [], [((t, path), Split(ids, lab.pi, lab.xi, res.remainder))]
            if verify:
                checks.append(((t, path), sandwich_holds(local, lab, res, S)))
            for i, R in enumerate(res.parts):
                sub = build(ids[R.ids], t + 1, path + (i,))
                if sub is None:
                    break
                leaves += sub[0]
                checks += sub[1]
            else:
                return leaves, checks
            stats["backtracks"] += 1
        return None

    out = build(np.arange(G0.m), 0, ())
    if out is None:
        t, path, exc = last_error[0]
        k = _path_index(path, S)
        msg = f"round {t}, part {k}: {exc.args[0]} (redraw budget of {max_backtracks} per split exhausted)"
        if isinstance(exc, CompletionInfeasible):
            raise CompletionInfeasible(msg, exc.slice_index, (t, k))
        raise BudgetExhausted(msg, exc.attempts, exc.acceptance_rate)
    leaves, checks = out
    parts = [EdgeSubset(G0, ids) for ids, _ in leaves]
    lineage = [(_path_index(p[:-1], S), p[-1]) if p else (-1, 0) for _, p in leaves]
    splits = {(t, _path_index(p, S)): c for (t, p), c in checks if isinstance(c, Split)}
    checks = [((t, _path_index(p, S)), c) for (t, p), c in checks if not isinstance(c, Split)]
    return Decomposition(G0, parts, r_target, sched_root.at(r_target), lineage,
                         stats["retries"] + stats["backtracks"], checks, splits)


def _path_index(path, S):
    k = 0
    for i in path:
        k = k * S + i
    return k


# ---------------------------------------------------------------------------
# excellence


@dataclass
class ExcellenceEstimate:
    pass_rate: float
    ci: tuple
    trials: int
    passes: int
    threshold: float
    meets_threshold: bool
    conditioning_failures: int = 0


def certify_excellent(G, sched, trials=200, seed=None, threshold=None, mode="auto", probe_budget=200,
                      max_attempts=10**4, confidence=0.95):
    """Monte Carlo estimate of the probability that a conditioned labeling is admissible.

    Trials whose conditioning exhausts ``max_attempts`` count as failures. The
    interval is Clopper-Pearson.
    """
    from scipy.stats import binomtest

    rng = as_rng(seed)
    if threshold is None:
        threshold = 1 - float(G.n) ** -50 if sched.profile == "paper" else DESK_EXCELLENCE
    passes = cond_fail = 0
    for _ in range(trials):
        try:
            lab = condition_labeling(G, sched, rng, max_attempts=max_attempts)
        except BudgetExhausted:
            cond_fail += 1
            continue
        if check_admissible(G, lab, sched, mode=mode, probe_budget=probe_budget, seed=rng).admissible:
            passes += 1
    ci = binomtest(passes, trials).proportion_ci(confidence_level=confidence, method="exact")
    rate = passes / trials
    return ExcellenceEstimate(rate, (ci.low, ci.high), trials, passes, threshold, rate >= threshold, cond_fail)
