"""Branch-and-bound elimination of candidates for multi-step search.

Two bounds drive the pruning. The lower bound is the exact lookahead value of
the currently most probable point (improved as better candidates are
evaluated). The upper bound on a candidate with posterior ``p`` is

    p * (u*(h-1, n+1) + 1) + (1 - p) * u*(h-1, n)

where ``u*`` is built recursively from ``p*(n)``, the model's bound on any
posterior after ``n`` additional positive observations. Solving for ``p``
gives a probability threshold below which a candidate can never be optimal.
Pruning is applied at every node of the lookahead tree, with ``n`` set to the
number of hypothetical positives on the path from the root.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

from . import _backend
from ._engine import PRUNE_SLACK
from .errors import ConfigurationError, DomainExhausted

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoundTable:
    """Upper bounds computed once per root state.

    ``p_star[n]`` for ``n`` in ``0..horizon``; ``u_star[h][n]`` is defined for
    ``1 <= h <= horizon`` and ``n <= horizon - h + 1`` and is NaN elsewhere
    (a NaN threshold never prunes). Row 0 is all zeros.
    """

    horizon: int
    p_star: tuple
    u_star: tuple

    def ustar(self, h: int, n: int) -> float:
        return self.u_star[h][n]


def utility_bounds_from_pstar(p_star, horizon: int):
    """The ``u*`` recursion over a sequence of ``p*`` values."""
    if horizon < 1:
        raise ConfigurationError("horizon must be at least 1")
    if len(p_star) < horizon + 1:
        raise ConfigurationError(f"need p* for n = 0..{horizon}")
    width = horizon + 1
    u = [[0.0] * width] + [[math.nan] * width for _ in range(horizon)]
    for n in range(width):
        u[1][n] = float(p_star[n])
    for h in range(2, horizon + 1):
        for n in range(horizon - h + 2):
            p = p_star[n]
            u[h][n] = p * (u[h - 1][n + 1] + 1.0) + (1.0 - p) * u[h - 1][n]
    return tuple(tuple(row) for row in u)


def bound_table(state, horizon: int) -> BoundTable:
    """p* for every n up to ``horizon`` against ``state``, plus the u* table."""
    p_star = tuple(state.probability_upper_bound(n) for n in range(horizon + 1))
    return BoundTable(horizon, p_star, utility_bounds_from_pstar(p_star, horizon))


def utility_upper_bound(table, horizon: int, n: int) -> float:
    """u*(horizon, n): bound on the best ``horizon``-step value after ``n`` extra positives.

    ``table`` is a :class:`BoundTable` or a plain sequence of ``p*`` values.
    """
    if horizon < 1 or n < 0:
        raise ConfigurationError("need horizon >= 1 and n >= 0")
    if isinstance(table, BoundTable):
        if horizon <= table.horizon and n <= table.horizon - horizon + 1:
            return table.u_star[horizon][n]
        p_star = table.p_star
    else:
        p_star = tuple(table)
    if len(p_star) < horizon + n:
        raise ConfigurationError(f"u*({horizon}, {n}) needs p* up to n = {horizon + n - 1}")
    memo = {}

    def rec(h, m):
        if h == 1:
            return float(p_star[m])
        key = (h, m)
        if key not in memo:
            p = p_star[m]
            memo[key] = p * (rec(h - 1, m + 1) + 1.0) + (1.0 - p) * rec(h - 1, m)
        return memo[key]

    return rec(horizon, n)


def candidate_upper_bound(table, horizon: int, p: float, n: int = 0) -> float:
    """Upper bound on the ``horizon``-step value of a point with posterior ``p``."""
    if horizon == 1:
        return p
    lo = utility_upper_bound(table, horizon - 1, n)
    hi = utility_upper_bound(table, horizon - 1, n + 1)
    return p * (hi + 1.0) + (1.0 - p) * lo


def prune_threshold(table, horizon: int, incumbent: float, n: int = 0) -> float:
    """Posterior below which a candidate cannot beat ``incumbent``.

    May be <= 0 (nothing prunes) or > 1 (everything but the incumbent prunes).
    """
    if horizon < 2:
        raise ConfigurationError("thresholds need horizon >= 2")
    lo = utility_upper_bound(table, horizon - 1, n)
    hi = utility_upper_bound(table, horizon - 1, n + 1)
    return (incumbent - lo) / (hi + 1.0 - lo)


def _greedy_point(state) -> int:
    best, bp = -1, -1.0
    for x in state.unlabeled():
        p = state.posterior(x)
        if p > bp:
            best, bp = x, p
    if best < 0:
        raise DomainExhausted("no unlabeled points")
    return best


def greedy_lower_bound(state, horizon: int, backend=None) -> float:
    """Exact ``horizon``-step value of the most probable point (lowest id on ties)."""
    if horizon < 1:
        raise ConfigurationError("horizon must be at least 1")
    x = _greedy_point(state)
    return _backend.lookahead_value(state, x, horizon, backend=backend)[0]


@dataclass(frozen=True)
class Decision:
    """Outcome of one lookahead selection."""

    point: int
    value: float
    expansions: int
    seconds: float
    pruned: bool


def search_decision(state, horizon: int, prune: bool = True, tighten: bool = True,
                    backend=None) -> Decision:
    """Select the ``horizon``-step optimal point, with counters.

    Pruning is silently disabled for models that do not declare the
    nontarget-monotonicity property the bounds rely on.
    """
    if horizon < 1:
        raise ConfigurationError("horizon must be at least 1")
    if prune and not getattr(state, "nontarget_monotone", False):
        log.warning("model %r is not nontarget-monotone; pruning disabled", type(state).__name__)
        prune = False
    start = time.perf_counter()
    table = bound_table(state, horizon).u_star if prune and horizon > 1 else None
    x, v, expansions = _backend.lookahead_best(state, horizon, table, tighten, backend)
    seconds = time.perf_counter() - start
    if x < 0:
        raise DomainExhausted("no unlabeled points")
    return Decision(x, v, expansions, seconds, table is not None)


def pruned_select(state, horizon: int, tighten: bool = True, backend=None) -> int:
    """Branch-and-bound selection; identical to the exhaustive argmax."""
    return search_decision(state, horizon, True, tighten, backend).point


__all__ = [
    "BoundTable",
    "Decision",
    "PRUNE_SLACK",
    "bound_table",
    "candidate_upper_bound",
    "greedy_lower_bound",
    "prune_threshold",
    "pruned_select",
    "search_decision",
    "utility_bounds_from_pstar",
    "utility_upper_bound",
]
