"""Pure-Python lookahead recursion over any posterior model.

This is the reference implementation of the expectimax recursion and of the
branch-and-bound variant. The compiled k-NN kernel in ``_knn_core`` mirrors
it operation for operation, so both produce the same values, the same
selections and the same expansion counts.

An *expansion* is one evaluation of a candidate's lookahead value with at
least two steps remaining, i.e. one candidate whose outcomes get conditioned
on. Horizon-1 evaluations are plain posterior reads and are not counted.
"""

from __future__ import annotations

# Candidates are pruned only when their bound falls below the incumbent by
# more than this; keeps floating-point ties from being discarded.
PRUNE_SLACK = 1e-10


class Expectimax:
    """Lookahead evaluator bound to one model.

    ``ustar`` is an optional table with ``ustar[h][n]`` upper bounds; when
    given, candidates are pruned at every interior node. With ``tighten``
    the incumbent is raised to the best exact value seen so far; otherwise
    it stays at the value of the node's most probable point.
    """

    def __init__(self, model, ustar=None, tighten=True):
        self.model = model
        self.ustar = ustar
        self.tighten = tighten
        self.expansions = 0

    def value(self, x: int, h: int, n: int = 0) -> float:
        model = self.model
        p = model.posterior(x)
        if h == 1:
            return p
        self.expansions += 1
        v1 = v0 = 0.0
        if p > 0.0:
            token = model.condition(x, 1)
            v1 = self.best(h - 1, n + 1)[1]
            model.undo(token)
        if p < 1.0:
            token = model.condition(x, 0)
            v0 = self.best(h - 1, n)[1]
            model.undo(token)
        return p * (1.0 + v1) + (1.0 - p) * v0

    def best(self, h: int, n: int = 0):
        """(argmax, max) of the h-step value over unlabeled points.

        Returns ``(-1, 0.0)`` when nothing is left to query.
        """
        model = self.model
        if h == 1:
            bx, bv = -1, -1.0
            for x in model.unlabeled():
                p = model.posterior(x)
                if p > bv:
                    bx, bv = x, p
            return (bx, bv) if bx >= 0 else (-1, 0.0)
        if self.ustar is None:
            bx, bv = -1, -1.0
            for x in model.unlabeled():
                v = self.value(x, h, n)
                if v > bv:
                    bx, bv = x, v
            return (bx, bv) if bx >= 0 else (-1, 0.0)
        return self._pruned_best(h, n)

    def _pruned_best(self, h: int, n: int):
        model = self.model
        cands = sorted(((model.posterior(x), x) for x in model.unlabeled()),
                       key=lambda c: (-c[0], c[1]))
        if not cands:
            return -1, 0.0
        bx = cands[0][1]
        bv = self.value(bx, h, n)
        incumbent = bv
        lo = self.ustar[h - 1][n]
        hi = self.ustar[h - 1][n + 1]
        denom = hi + 1.0 - lo
        for p, x in cands[1:]:
            theta = (incumbent - PRUNE_SLACK - lo) / denom
            if p < theta:
                break
            v = self.value(x, h, n)
            if v > bv or (v == bv and x < bx):
                bx, bv = x, v
            if self.tighten and v > incumbent:
                incumbent = v
        return bx, bv
