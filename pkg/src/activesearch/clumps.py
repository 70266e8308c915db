"""Exact analysis of clump spaces.

A clump is a group of points whose labels are all equal: every member is a
target with probability ``prob``, and different clumps are independent.
These spaces make the lookahead policies exactly solvable and show that a
longer horizon can beat a shorter one by an arbitrary factor.

Two exact tools live here:

* :class:`ClumpModel`, a posterior model that plugs into the generic policy
  engine (useful as a brute-force cross-check on small spaces);
* :class:`ClumpDP`, a dynamic program over multisets of clump statuses that
  evaluates lookahead values and whole-policy values without enumerating
  individual points.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass

from .errors import ConfigurationError, DomainExhausted, NoCrossoverFound, ParseError, UsageError

UNOBSERVED = -1


@dataclass(frozen=True)
class Clump:
    size: int
    prob: float

    def __post_init__(self):
        if self.size < 1:
            raise ConfigurationError("clump size must be positive")
        if not 0.0 < self.prob < 1.0:
            raise ConfigurationError(f"clump probability must lie in (0, 1), got {self.prob}")


class ClumpSpace(tuple):
    """Ordered clumps; point ids run contiguously through them in order."""

    def __new__(cls, clumps):
        return super().__new__(cls, (c if isinstance(c, Clump) else Clump(*c) for c in clumps))

    @property
    def n_points(self) -> int:
        return sum(c.size for c in self)

    @classmethod
    def homogeneous(cls, count, size, prob):
        return cls([Clump(size, prob)] * count)

    @classmethod
    def pair_and_single(cls, eps, delta):
        """A correlated pair with probability ``eps`` and a lone point with ``delta``."""
        return cls([Clump(2, eps), Clump(1, delta)])

    @classmethod
    def separating(cls, eps, delta, horizon, t, large_size=None):
        """``t`` clumps of size ``t`` (probability ``eps``) then ``t`` of size ``horizon`` (``delta``)."""
        large = t if large_size is None else large_size
        return cls([Clump(large, eps)] * t + [Clump(horizon, delta)] * t)


def load_clump_space(path) -> ClumpSpace:
    """Read a ``count,size,prob`` file (one clump kind per line; ``#`` comments)."""
    clumps = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            if lineno == 1 and row[0].strip() == "count":
                continue
            if len(row) != 3:
                raise ParseError("expected count,size,prob", lineno)
            try:
                count, size, prob = int(row[0]), int(row[1]), float(row[2])
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if count < 1:
                raise ParseError("count must be positive", lineno)
            try:
                clumps.extend([Clump(size, prob)] * count)
            except ConfigurationError as exc:
                raise ParseError(str(exc), lineno) from None
    if not clumps:
        raise ParseError("no clumps defined")
    return ClumpSpace(clumps)


class ClumpModel:
    """Posterior model over the points of a clump space.

    Unqueried members of an unobserved clump have posterior ``prob``; once
    any member is observed, the remaining members are certain.
    """

    nontarget_monotone = True

    def __init__(self, space):
        self.space = ClumpSpace(space)
        self.clump_of = [i for i, c in enumerate(self.space) for _ in range(c.size)]
        self.status = [UNOBSERVED] * len(self.space)
        self.labels = [-1] * len(self.clump_of)

    @property
    def n_points(self) -> int:
        return len(self.labels)

    def unlabeled(self):
        return [x for x, y in enumerate(self.labels) if y < 0]

    def label_of(self, x):
        y = self.labels[x]
        return None if y < 0 else y

    def posterior(self, x: int) -> float:
        if self.labels[x] >= 0:
            raise UsageError(f"point {x} is already queried")
        c = self.clump_of[x]
        s = self.status[c]
        return self.space[c].prob if s == UNOBSERVED else float(s)

    def condition(self, x: int, y: int):
        if self.labels[x] >= 0:
            raise UsageError(f"point {x} is already queried")
        c = self.clump_of[x]
        prev = self.status[c]
        if prev != UNOBSERVED and prev != y:
            raise UsageError(f"label {y} at point {x} contradicts its clump")
        self.labels[x] = y
        self.status[c] = y
        return (x, prev)

    def undo(self, token):
        x, prev = token
        self.labels[x] = -1
        self.status[self.clump_of[x]] = prev

    def probability_upper_bound(self, n: int) -> float:
        # one extra positive can reveal a whole clump of certain targets
        unl = self.unlabeled()
        if not unl:
            raise DomainExhausted("no unlabeled points")
        if n >= 1:
            return 1.0
        return max(self.posterior(x) for x in unl)

    def snapshot(self):
        return (tuple(self.labels), tuple(self.status))


def clump_posterior(model: ClumpModel, x: int) -> float:
    return model.posterior(x)


class ClumpDP:
    """Exact lookahead values by dynamic programming over clump statuses.

    A configuration is a multiset of ``(prob, size, status, remaining)``
    descriptors, one per clump with unqueried members; all unqueried members
    of equal descriptors are interchangeable, so values are memoised on the
    multiset. Branches of probability zero are skipped, matching the policy
    engine.
    """

    def __init__(self):
        self._values = {}
        self._best = {}

    @staticmethod
    def canonical(space, status, remaining):
        counts = Counter(
            (c.prob, c.size, s, r) for c, s, r in zip(space, status, remaining) if r > 0
        )
        return tuple(sorted(counts.items()))

    @staticmethod
    def _posterior(desc):
        s = desc[2]
        return desc[0] if s == UNOBSERVED else float(s)

    @staticmethod
    def _after(config, desc, y):
        counts = dict(config)
        counts[desc] -= 1
        if not counts[desc]:
            del counts[desc]
        prob, size, _, rem = desc
        if rem > 1:
            new = (prob, size, y, rem - 1)
            counts[new] = counts.get(new, 0) + 1
        return tuple(sorted(counts.items()))

    def value(self, config, desc, h: int) -> float:
        """Lookahead value of querying a member of ``desc`` with ``h`` steps left."""
        p = self._posterior(desc)
        if h == 1:
            return p
        key = (config, desc, h)
        if key in self._values:
            return self._values[key]
        v1 = v0 = 0.0
        if p > 0.0:
            v1 = self.best(self._after(config, desc, 1), h - 1)
        if p < 1.0:
            v0 = self.best(self._after(config, desc, 0), h - 1)
        v = p * (1.0 + v1) + (1.0 - p) * v0
        self._values[key] = v
        return v

    def best(self, config, h: int) -> float:
        if h == 0 or not config:
            return 0.0
        key = (config, h)
        if key not in self._best:
            self._best[key] = max(self.value(config, desc, h) for desc, _ in config)
        return self._best[key]


def exact_policy_value(space, horizon: int, t: int) -> float:
    """Expected targets found by the ``horizon``-step policy in ``t`` queries.

    Decisions are simulated exactly, including the lowest-id tie-break (the
    candidate in the earliest clump wins), with horizon ``min(horizon, left)``.
    """
    space = ClumpSpace(space)
    if horizon < 1:
        raise ConfigurationError("horizon must be at least 1")
    if t < 0 or t > space.n_points:
        raise ConfigurationError(f"t={t} must lie in 0..{space.n_points}")
    dp = ClumpDP()
    memo = {}

    def run(status, remaining, budget):
        if budget == 0:
            return 0.0
        key = (status, remaining, budget)
        if key in memo:
            return memo[key]
        h = min(horizon, budget)
        config = ClumpDP.canonical(space, status, remaining)
        best_c, best_v = -1, -1.0
        for i, (c, s, r) in enumerate(zip(space, status, remaining)):
            if r > 0:
                v = dp.value(config, (c.prob, c.size, s, r), h)
                if v > best_v:
                    best_c, best_v = i, v
        c = space[best_c]
        s = status[best_c]
        p = c.prob if s == UNOBSERVED else float(s)
        rem = remaining[:best_c] + (remaining[best_c] - 1,) + remaining[best_c + 1:]
        total = 0.0
        if p > 0.0:
            st = status[:best_c] + (1,) + status[best_c + 1:]
            total += p * (1.0 + run(st, rem, budget - 1))
        if p < 1.0:
            st = status[:best_c] + (0,) + status[best_c + 1:]
            total += (1.0 - p) * run(st, rem, budget - 1)
        memo[key] = total
        return total

    return run((UNOBSERVED,) * len(space), tuple(c.size for c in space), t)


def first_query_values(space, horizon: int):
    """Lookahead value of querying each clump first, from the all-unobserved state."""
    space = ClumpSpace(space)
    dp = ClumpDP()
    status = (UNOBSERVED,) * len(space)
    remaining = tuple(c.size for c in space)
    config = ClumpDP.canonical(space, status, remaining)
    return [dp.value(config, (c.prob, c.size, UNOBSERVED, c.size), horizon) for c in space]


def homogeneous_value_sum(eps: float, t: int) -> float:
    return math.fsum(eps * (1.0 - eps) ** (i - 1) * (t - i + 1) for i in range(1, t + 1))


def homogeneous_value_closed(eps: float, t: int) -> float:
    # (1-eps)^(t+1) - 1 via expm1/log1p to limit cancellation
    return (math.expm1((t + 1) * math.log1p(-eps)) + eps * (t + 1)) / eps


def eq2_value(eps: float, t: int) -> float:
    """Expected targets of any lookahead policy over ``t`` clumps of size ``t``.

    Computes the finite sum and checks it against the closed form.
    """
    if not 0.0 < eps < 1.0:
        raise ConfigurationError("eps must lie in (0, 1)")
    if t < 1:
        raise ConfigurationError("t must be at least 1")
    total = homogeneous_value_sum(eps, t)
    closed = homogeneous_value_closed(eps, t)
    if not math.isclose(total, closed, rel_tol=1e-12, abs_tol=1e-12):
        raise ArithmeticError(f"sum {total!r} and closed form {closed!r} disagree")
    return total


def eq3_bound(delta: float, horizon: int, t: int) -> float:
    """Upper bound on the ``horizon``-step policy's value when it chases small clumps."""
    if not 0.0 < delta < 1.0:
        raise ConfigurationError("delta must lie in (0, 1)")
    if horizon < 1 or t < 1:
        raise ConfigurationError("horizon and t must be at least 1")
    return (t + horizon) * delta * horizon / (delta * (horizon - 1) + 1.0)


def clump_difference(eps: float, delta: float, horizon: int) -> float:
    """Advantage of a ``delta`` clump over an ``eps`` clump at horizon ``horizon``."""
    if not 0.0 < eps < delta < 1.0:
        raise ConfigurationError("need 0 < eps < delta < 1")
    a = (1.0 - eps) ** horizon
    b = (1.0 - delta) ** horizon
    return a - b + (b - 1.0) / delta - (a - 1.0) / eps


def theorem1_ratio_bound(eps: float, delta: float, horizon: int, t: int) -> float:
    """Lower bound on how much a longer horizon outperforms ``horizon`` steps."""
    if not 0.0 < eps < delta < 1.0:
        raise ConfigurationError("need 0 < eps < delta < 1")
    if horizon < 1 or t < 1:
        raise ConfigurationError("horizon and t must be at least 1")
    ratio = homogeneous_value_closed(eps, t) / eq3_bound(delta, horizon, t)
    direct = (((1.0 - eps) ** (t + 1) + eps * t + eps - 1.0) * (delta * (horizon - 1) + 1.0)
              / (eps * delta * horizon * (t + horizon)))
    if not math.isclose(ratio, direct, rel_tol=1e-9):
        raise ArithmeticError(f"ratio forms disagree: {ratio!r} vs {direct!r}")
    return ratio


def crossover_gap(horizon: int, m: int, k: int, delta: float, eps: float) -> float:
    """m-step value of a point in a (k, eps) clump minus one in a (horizon, delta) clump."""
    large, small = first_query_values([Clump(k, eps), Clump(horizon, delta)], m)
    return large - small


def lemma1_crossover(horizon: int, m: int, k: int, delta: float, tol: float = 1e-9) -> float:
    """An ``eps < delta`` at which the m-step policy prefers the larger clump.

    Bisects the sign change of :func:`crossover_gap` on ``(0, delta)`` and
    returns the upper end of the final bracket, re-certified by a fresh DP
    evaluation.
    """
    if not 1 <= horizon < m <= k:
        raise ConfigurationError("need 1 <= horizon < m <= k")
    if not 0.0 < delta < 1.0:
        raise ConfigurationError("delta must lie in (0, 1)")
    hi = delta - tol
    if hi <= 0.0 or crossover_gap(horizon, m, k, delta, hi) <= 0.0:
        raise NoCrossoverFound(f"no eps below delta={delta} favours the larger clump")
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid > 0.0 and crossover_gap(horizon, m, k, delta, mid) > 0.0:
            hi = mid
        else:
            lo = mid
    if not (0.0 < hi < delta and crossover_gap(horizon, m, k, delta, hi) > 0.0):
        raise NoCrossoverFound("bisection result failed certification")
    return hi
