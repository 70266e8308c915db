"""The posterior-model contract consumed by the policies.

Any object with the methods below can be driven by the search, pruning and
surveying code. Two implementations ship with the package:
:class:`activesearch.knn.KnnState` and :class:`activesearch.clumps.ClumpModel`.
"""

from __future__ import annotations

from typing import Hashable, Protocol, runtime_checkable


@runtime_checkable
class PosteriorModel(Protocol):
    #: True when observing a nontarget can never raise any other point's
    #: posterior. Pruning is refused for models that do not declare this.
    nontarget_monotone: bool

    @property
    def n_points(self) -> int: ...

    def unlabeled(self) -> list[int]:
        """Unlabeled point ids in ascending order."""

    def label_of(self, x: int) -> int | None:
        """Observed label of ``x``, or None when unlabeled."""

    def posterior(self, x: int) -> float:
        """Pr(y = 1 | x, D) for an unlabeled point."""

    def condition(self, x: int, y: int) -> Hashable:
        """Observe label ``y`` at ``x``; returns an undo token."""

    def undo(self, token: Hashable) -> None:
        """Revert the most recent :meth:`condition` call."""

    def probability_upper_bound(self, n: int) -> float:
        """Bound on any unlabeled posterior after at most ``n`` more positives."""

    def snapshot(self) -> Hashable:
        """Hashable value that changes whenever the observable state does."""
