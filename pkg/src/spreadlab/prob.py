"""Product measures, conditioned (local-lemma) measures and tail bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .errors import BudgetExhausted, DegenerateInstance, InvalidInput


def as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


class ProductSpace:
    """Independent finite random variables.

    ``values[i]`` is the value set of variable i and ``probs[i]`` its law.
    """

    def __init__(self, values: Sequence[Sequence], probs: Sequence[Sequence[float]]):
        if len(values) != len(probs):
            raise InvalidInput("values and probs must have the same length")
        self.values = [np.asarray(v) for v in values]
        self.probs = []
        for v, p in zip(self.values, probs):
            p = np.asarray(p, dtype=float)
            if p.shape != v.shape or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
                raise InvalidInput(f"invalid probability vector {p}")
            self.probs.append(p)
        self._cum = [np.cumsum(p)[:-1] for p in self.probs]

    @classmethod
    def bernoulli(cls, ps):
        return cls([(0, 1)] * len(ps), [(1 - p, p) for p in ps])

    @classmethod
    def uniform(cls, sizes):
        return cls([tuple(range(k)) for k in sizes], [(1 / k,) * k for k in sizes])

    def __len__(self):
        return len(self.values)

    @property
    def n_states(self):
        return math.prod(len(v) for v in self.values)

    def sample(self, rng, size: int) -> np.ndarray:
        """``size`` x n_vars array of independent draws."""
        out = np.empty((size, len(self)), dtype=np.result_type(*self.values) if self.values else int)
        u = rng.random((size, len(self)))
        for i, (vals, cum) in enumerate(zip(self.values, self._cum)):
            out[:, i] = vals[np.searchsorted(cum, u[:, i], side="right")]
        return out

    def enumerate(self):
        """All states (rows) with their product probabilities."""
        grids = np.meshgrid(*[np.arange(len(v)) for v in self.values], indexing="ij")
        idx = np.stack([g.ravel() for g in grids], axis=1) if grids else np.zeros((1, 0), int)
        states = np.empty(idx.shape, dtype=np.result_type(*self.values) if self.values else int)
        weights = np.ones(idx.shape[0])
        for i, (vals, p) in enumerate(zip(self.values, self.probs)):
            states[:, i] = vals[idx[:, i]]
            weights *= p[idx[:, i]]
        return states, weights


@dataclass
class Event:
    """An event given by a vectorized predicate over assignment rows.

    ``predicate`` maps a (k, n_vars) array to a length-k boolean array and must
    only read the columns in ``support``.
    """

    predicate: Callable[[np.ndarray], np.ndarray]
    support: frozenset

    def __post_init__(self):
        self.support = frozenset(self.support)

    def __call__(self, states):
        return np.asarray(self.predicate(np.atleast_2d(states)), dtype=bool)

    @classmethod
    def equals(cls, assignment: dict):
        """Conjunction of ``X_i == value`` over the given items."""
        items = sorted(assignment.items())
        cols = np.array([i for i, _ in items], dtype=int)
        vals = np.array([v for _, v in items])

        def pred(x):
            return np.all(x[:, cols] == vals, axis=1)

        return cls(pred, frozenset(cols.tolist()))

    @classmethod
    def from_function(cls, fn, support):
        """Wrap a scalar predicate ``fn(row) -> bool``."""
        return cls(lambda x: np.fromiter((fn(r) for r in x), bool, len(x)), support)

    def negate(self):
        return Event(lambda x: ~self(x), self.support)


@dataclass
class EventSystem:
    """Bad events with a dependency graph covering all support overlaps."""

    events: list
    extra_edges: set = field(default_factory=set)

    def __post_init__(self):
        self.events = list(self.events)
        edges = {tuple(sorted(e)) for e in self.extra_edges}
        for i, j in combinations(range(len(self.events)), 2):
            if self.events[i].support & self.events[j].support:
                edges.add((i, j))
        self.edges = edges
        deg = [0] * len(self.events)
        for i, j in edges:
            deg[i] += 1
            deg[j] += 1
        self.max_degree = max(deg, default=0)

    def __len__(self):
        return len(self.events)

    def any_occurs(self, states):
        states = np.atleast_2d(states)
        bad = np.zeros(states.shape[0], dtype=bool)
        for ev in self.events:
            bad |= ev(states)
        return bad

    def overlap_count(self, support) -> int:
        """Number of events whose support meets ``support``."""
        support = frozenset(support)
        return sum(1 for ev in self.events if ev.support & support)


def chernoff_upper(m: int, p: float, delta: float) -> float:
    """Bound on P[Bin(m, p) > (1 + delta) p m]."""
    if m < 1 or not 0 < p < 1 or delta < 0:
        raise InvalidInput("need m >= 1, 0 < p < 1, delta >= 0")
    return math.exp(-delta * delta * p * m / (2 + delta))


def chernoff_lower(m: int, p: float, delta: float) -> float:
    """Bound on P[Bin(m, p) < (1 - delta) p m]."""
    if m < 1 or not 0 < p < 1 or not 0 <= delta <= 1:
        raise InvalidInput("need m >= 1, 0 < p < 1, 0 <= delta <= 1")
    return math.exp(-delta * delta * p * m / 2)


def rejection_sample(space: ProductSpace, system: EventSystem, seed=None, max_attempts=10**6, batch=64):
    """One draw from the product measure conditioned on no event occurring.

    Draws are made in batches of ``batch`` and the first accepted one is
    returned, which is exactly the conditional law.
    """
    rng = as_rng(seed)
    attempts = 0
    while attempts < max_attempts:
        k = min(batch, max_attempts - attempts)
        x = space.sample(rng, k)
        ok = np.flatnonzero(~system.any_occurs(x))
        if ok.size:
            attempts += int(ok[0]) + 1
            return x[ok[0]]
        attempts += k
    raise BudgetExhausted(f"no accepted sample in {attempts} attempts", attempts, 0.0)


def rejection_sample_many(space, system, size, seed=None, max_attempts=10**8):
    """``size`` independent conditioned draws (rows), sampled in bulk."""
    rng = as_rng(seed)
    out = []
    got = attempts = 0
    while got < size:
        if attempts >= max_attempts:
            raise BudgetExhausted(f"{got}/{size} samples after {attempts} attempts", attempts, got / attempts)
        k = max(1024, 2 * (size - got))
        x = space.sample(rng, k)
        x = x[~system.any_occurs(x)]
        attempts += k
        out.append(x[: size - got])
        got += len(out[-1])
    return np.concatenate(out, axis=0)


def lll_comparison_bound(P_E: float, p: float, N: int) -> float:
    """min(1, P_E * exp(6 p N)), evaluated in log space."""
    if not 0 <= P_E <= 1 or p < 0 or N < 0:
        raise InvalidInput("need 0 <= P_E <= 1, p >= 0, N >= 0")
    if P_E == 0:
        return 0.0
    return math.exp(min(0.0, math.log(P_E) + 6 * p * N))


@dataclass
class LLLReport:
    conditional_prob: float
    product_prob: float
    bound: float
    holds: bool
    p: float
    max_degree: int
    overlap: int
    hypothesis_ok: bool


def verify_lll_comparison(space: ProductSpace, system: EventSystem, query: Event, rtol=1e-12) -> LLLReport:
    """Exact conditional vs product probability of ``query`` and the comparison bound.

    ``p`` is the largest product probability of a bad event; the hypothesis
    ``4 p Delta <= 1`` is reported, not enforced.
    """
    if space.n_states > 1 << 20:
        raise InvalidInput(f"state space of size {space.n_states} too large to enumerate")
    states, w = space.enumerate()
    p = 0.0
    bad = np.zeros(len(w), dtype=bool)
    for ev in system.events:
        occ = ev(states)
        p = max(p, float(w[occ].sum()))
        bad |= occ
    good_mass = float(w[~bad].sum())
    if good_mass <= 0:
        raise DegenerateInstance("the conditioning event has probability zero")
    q = query(states)
    product_prob = float(w[q].sum())
    conditional = float(w[q & ~bad].sum()) / good_mass
    N = system.overlap_count(query.support)
    bound = lll_comparison_bound(min(product_prob, 1.0), p, N)
    holds = conditional <= bound * (1 + rtol) + rtol
    return LLLReport(
        conditional_prob=conditional,
        product_prob=product_prob,
        bound=bound,
        holds=bool(holds),
        p=p,
        max_degree=system.max_degree,
        overlap=N,
        hypothesis_ok=4 * p * system.max_degree <= 1,
    )


def random_lll_instance(seed=None, n_vars=12, n_events=(2, 6), support=(2, 4), max_tries=10_000):
    """A random binary product space, bad events and query with 4 p Delta <= 1.

    Variables are Bernoulli with success probabilities in [0.2, 0.8]; each bad
    event and the query is a conjunction ``X_S == pattern`` on a random support.
    Instances violating the local-lemma hypothesis are redrawn.
    """
    rng = as_rng(seed)
    for _ in range(max_tries):
        rho = rng.uniform(0.2, 0.8, size=n_vars)
        space = ProductSpace.bernoulli(rho.tolist())

        def conj():
            k = int(rng.integers(support[0], support[1] + 1))
            cols = rng.choice(n_vars, size=k, replace=False)
            return Event.equals({int(c): int(rng.integers(2)) for c in cols})

        events = [conj() for _ in range(int(rng.integers(n_events[0], n_events[1] + 1)))]
        system = EventSystem(events)
        p = max(_event_prob(ev, rho) for ev in events)
        if 4 * p * system.max_degree <= 1:
            return space, system, conj()
    raise BudgetExhausted("no instance satisfying 4 p Delta <= 1", max_tries, 0.0)


def _event_prob(ev, rho):
    """Probability of ``ev`` under independent Bernoulli(rho), by enumerating its support."""
    cols = sorted(ev.support)
    k = len(cols)
    idx = np.arange(1 << k)
    bits = (idx[:, None] >> np.arange(k)) & 1
    states = np.zeros((1 << k, len(rho)), dtype=int)
    states[:, cols] = bits
    w = np.prod(np.where(bits == 1, rho[cols], 1 - rho[cols]), axis=1)
    return float(w[ev(states)].sum())
