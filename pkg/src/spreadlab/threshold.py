"""Monte Carlo threshold estimation for containment properties.

Trials are coupled across levels: trial ``t`` draws one uniform per candidate
triple (or one random color order per edge) from its own seed stream, and the
instance at level p keeps the triples whose uniform is below p (the list of an
edge at size k is the first k colors of its order). Each trial's outcome is
therefore monotone in the level, every probe is still an unbiased estimate,
and bisection sees a monotone empirical curve.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .designs import (
    DEFAULT_NODE_BUDGET,
    latin_square_exists,
    list_coloring_bipartite,
    list_coloring_complete,
    sts_exists,
)
from .errors import BudgetExhausted, InvalidInput, InvalidRange
from .graph import ListAssignment, TripleSystem, host_edges

PROPERTIES = ("latin", "sts", "list-bipartite", "list-complete", "triple")
LIST_PROPERTIES = ("list-bipartite", "list-complete")
CSV_FIELDS = ("property", "n", "p", "trials", "successes", "unknowns", "fraction", "stderr")
UNRELIABLE_UNKNOWN_FRACTION = 0.10


@dataclass
class ThresholdExperiment:
    """One containment property at one size.

    ``triple`` ("contains at least one triple" of the random tripartite
    system) has the closed-form threshold 1 - 2**(-1/n**3) and serves as a
    calibration target. For the list properties the level is the list size k
    and ``palette`` defaults to n (bipartite) or n - 1 (complete, n = vertex
    count).
    """

    property: str
    n: int
    trials: int = 200
    seed: int = 0
    node_budget: int = DEFAULT_NODE_BUDGET
    tol: float = 0.01
    p_range: tuple = (0.0, 1.0)
    palette: int | None = None

    def __post_init__(self):
        if self.property not in PROPERTIES:
            raise InvalidInput(f"unknown property {self.property!r}; choose from {PROPERTIES}")
        if self.trials < 1:
            raise InvalidInput("trials must be >= 1")
        lo, hi = self.p_range
        if not 0 <= lo <= hi <= 1 and self.property not in LIST_PROPERTIES:
            raise InvalidInput("p_range must satisfy 0 <= lo <= hi <= 1")
        if self.property == "list-complete" and self.n % 2:
            raise InvalidInput("list-complete needs an even vertex count")
        if self.palette is None:
            self.palette = self.n - 1 if self.property == "list-complete" else self.n

    @property
    def structurally_absent(self) -> bool:
        """True for STS sizes with no design at all (n not 1 or 3 mod 6)."""
        return self.property == "sts" and self.n >= 2 and self.n % 6 not in (1, 3)

    # per-trial monotone knowledge: highest level known to fail, lowest known to succeed
    _known: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def trial_rng(self, t: int):
        return np.random.default_rng(np.random.SeedSequence(entropy=self.seed, spawn_key=(t,)))


@dataclass
class Estimate:
    level: float
    trials: int
    successes: int
    unknowns: int
    fraction: float
    stderr: float
    ci: tuple

    @property
    def unreliable(self) -> bool:
        return self.unknowns > UNRELIABLE_UNKNOWN_FRACTION * self.trials

    def row(self, exp: ThresholdExperiment) -> dict:
        return dict(
            property=exp.property, n=exp.n, p=_fmt_num(self.level), trials=self.trials,
            successes=self.successes, unknowns=self.unknowns, fraction=f"{self.fraction:.6f}",
            stderr=f"{self.stderr:.6f}",
        )


def _fmt_num(x):
    return str(int(x)) if float(x).is_integer() and x > 1 else repr(float(x))


def _triples_at(exp, rng, p):
    n = exp.n
    if exp.property in ("latin", "triple"):
        u = rng.random(n**3)
        idx = np.flatnonzero(u < p)
        return TripleSystem("tripartite", n, zip(idx // (n * n), idx // n % n, idx % n))
    allt = list(combinations(range(n), 3))
    u = rng.random(len(allt))
    return TripleSystem("plain", n, [t for t, x in zip(allt, u) if x < p])


def _lists_at(exp, rng, k):
    host = "bipartite" if exp.property == "list-bipartite" else "complete"
    edges = host_edges(host, exp.n)
    order = rng.random((len(edges), exp.palette)).argsort(axis=1)
    return ListAssignment(host, exp.n, k, exp.palette, {e: order[i, :k].tolist() for i, e in enumerate(edges)})


def trial_outcome(exp: ThresholdExperiment, t: int, level):
    """True / False for trial ``t`` at ``level``, or None if the solver ran out of budget.

    Outcomes are monotone in the level for a fixed trial, so a level at or
    above a known success (at or below a known failure) is answered without
    solving.
    """
    lo_fail, hi_succ = exp._known.get(t, (-math.inf, math.inf))
    if level >= hi_succ:
        return True
    if level <= lo_fail:
        return False
    out = _solve_trial(exp, t, level)
    if out is True:
        exp._known[t] = (lo_fail, min(hi_succ, level))
    elif out is False:
        exp._known[t] = (max(lo_fail, level), hi_succ)
    return out


def _solve_trial(exp, t, level):
    rng = exp.trial_rng(t)
    prop = exp.property
    try:
        if prop == "triple":
            n3 = exp.n**3
            return bool(n3 and rng.random(n3).min() < level)
        if prop in LIST_PROPERTIES:
            k = int(level)
            if not 0 <= k <= exp.palette:
                raise InvalidInput(f"list size {k} outside [0, {exp.palette}]")
            L = _lists_at(exp, rng, k)
            if prop == "list-bipartite":
                return list_coloring_bipartite(exp.n, L, exp.node_budget) is not None
            return list_coloring_complete(exp.n, L, exp.palette, exp.node_budget) is not None
        if exp.structurally_absent:
            return False
        H = _triples_at(exp, rng, level)
        if prop == "latin":
            return latin_square_exists(H, exp.node_budget) is not None
        return sts_exists(H, exp.node_budget) is not None
    except BudgetExhausted:
        return None


def success_prob(exp: ThresholdExperiment, p, confidence=0.95) -> Estimate:
    """Fraction of trials whose instance at level ``p`` has the property.

    ``p`` is the density for triple properties and the list size k for list
    properties. Budget-exhausted trials are counted as unknown and left out of
    the fraction; the interval is Clopper-Pearson over the decided trials.
    """
    from scipy.stats import binomtest

    succ = unk = 0
    for t in range(exp.trials):
        out = trial_outcome(exp, t, p)
        if out is None:
            unk += 1
        elif out:
            succ += 1
    decided = exp.trials - unk
    if decided == 0:
        return Estimate(p, exp.trials, 0, unk, math.nan, math.nan, (0.0, 1.0))
    frac = succ / decided
    ci = binomtest(succ, decided).proportion_ci(confidence_level=confidence, method="exact")
    return Estimate(p, exp.trials, succ, unk, frac, math.sqrt(frac * (1 - frac) / decided), (ci.low, ci.high))


@dataclass
class BisectionResult:
    p_half: float
    probes: list = field(default_factory=list)

    @property
    def unknown_fraction(self) -> float:
        total = sum(e.trials for e in self.probes)
        return sum(e.unknowns for e in self.probes) / total if total else 0.0


def bisect_threshold(exp: ThresholdExperiment) -> BisectionResult:
    """Bisect [lo, hi] until its width is at most ``tol``; return the midpoint.

    A probe with success fraction >= 1/2 moves the upper end down. The
    endpoints must bracket 1/2 (fraction at lo < 1/2 <= fraction at hi), except
    that a degenerate range lo == hi with the property holding returns lo.
    """
    if exp.property in LIST_PROPERTIES:
        raise InvalidInput("list properties are swept over k; use min_list_size")
    lo, hi = map(float, exp.p_range)
    probes = []
    top = success_prob(exp, hi)
    probes.append(top)
    if lo == hi:
        if top.fraction >= 0.5:
            return BisectionResult(lo, probes)
        raise InvalidRange(f"property fails at the single point {lo}")
    bottom = success_prob(exp, lo)
    probes.append(bottom)
    if not (bottom.fraction < 0.5 <= top.fraction):
        raise InvalidRange(f"fractions {bottom.fraction} at {lo} and {top.fraction} at {hi} do not bracket 1/2")
    while hi - lo > exp.tol:
        mid = (lo + hi) / 2
        est = success_prob(exp, mid)
        probes.append(est)
        if est.fraction >= 0.5:
            hi = mid
        else:
            lo = mid
    return BisectionResult((lo + hi) / 2, probes)


def min_list_size(exp: ThresholdExperiment, ks=None):
    """Smallest k whose success fraction is >= 1/2, with the estimates for every k tried."""
    if exp.property not in LIST_PROPERTIES:
        raise InvalidInput("min_list_size needs a list property")
    ks = range(1, exp.palette + 1) if ks is None else ks
    probes = []
    best = None
    for k in ks:
        est = success_prob(exp, k)
        probes.append(est)
        if best is None and est.fraction >= 0.5:
            best = k
    return best, probes


@dataclass
class ScalingFit:
    c: dict
    min: float
    max: float
    ratio: float


def scaling_fit(results: dict) -> ScalingFit:
    """c_n = p_half * n / log n for each size and the max/min spread."""
    if len(results) < 3:
        raise InvalidInput("scaling_fit needs at least 3 sizes")
    c = {}
    for n, p in sorted(results.items()):
        if n < 2:
            raise InvalidInput("sizes must be >= 2 (log n > 0)")
        c[n] = p * n / math.log(n)
    lo, hi = min(c.values()), max(c.values())
    return ScalingFit(c, lo, hi, hi / lo if lo > 0 else math.inf)


def estimates_to_csv(exp: ThresholdExperiment, estimates) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for e in estimates:
        w.writerow(e.row(exp))
    return buf.getvalue()
