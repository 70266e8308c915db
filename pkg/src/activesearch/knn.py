"""k-nearest-neighbor posterior model with pseudocount smoothing.

The probability that an unlabeled point ``x`` is a target is

    (gamma + alpha_x) / (1 + beta_x)

where ``beta_x`` counts the labeled points among the k nearest neighbors of
``x`` and ``alpha_x`` counts the positives among them. Conditioning on a new
label only touches the points that have the newly labeled point among their
neighbors, so a reverse-neighbor index is kept alongside the forward one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainExhausted, InputError, UsageError

DEFAULT_GAMMA = 0.1

_CHUNK = 512


@dataclass(frozen=True)
class NeighborIndex:
    """Forward and reverse k-NN lists over a fixed point set.

    ``neighbors[i]`` holds the ids of the k nearest neighbors of point ``i``
    ordered by increasing distance (ties by increasing id). ``reverse[j]`` is
    the sorted tuple of points that list ``j`` among their neighbors.
    ``rev_ptr``/``rev_idx`` store the same reverse index in CSR form.
    """

    neighbors: np.ndarray
    reverse: tuple
    rev_ptr: np.ndarray = field(repr=False)
    rev_idx: np.ndarray = field(repr=False)

    @property
    def n_points(self) -> int:
        return self.neighbors.shape[0]

    @property
    def k(self) -> int:
        return self.neighbors.shape[1]

    @classmethod
    def from_neighbors(cls, neighbors) -> "NeighborIndex":
        """Build an index from explicit forward lists (validated)."""
        nbrs = np.asarray(neighbors, dtype=np.int64)
        if nbrs.ndim != 2:
            raise InputError("neighbor lists must form an (N, k) array")
        n, k = nbrs.shape
        if k >= n:
            raise ConfigurationError(f"k={k} must be smaller than the number of points {n}")
        if nbrs.size and (nbrs.min() < 0 or nbrs.max() >= n):
            raise InputError("neighbor id out of range")
        for i in range(n):
            row = nbrs[i]
            if i in row or len(set(row.tolist())) != k:
                raise InputError(f"neighbor list of point {i} must hold {k} distinct other points")
        reverse_lists = [[] for _ in range(n)]
        for i in range(n):
            for j in nbrs[i]:
                reverse_lists[j].append(i)
        reverse = tuple(tuple(r) for r in reverse_lists)
        rev_ptr = np.zeros(n + 1, dtype=np.int64)
        rev_ptr[1:] = np.cumsum([len(r) for r in reverse])
        rev_idx = np.fromiter((i for r in reverse for i in r), dtype=np.int64, count=int(rev_ptr[-1]))
        nbrs.setflags(write=False)
        rev_ptr.setflags(write=False)
        rev_idx.setflags(write=False)
        return cls(nbrs, reverse, rev_ptr, rev_idx)


def build_neighbor_index(points, k: int) -> NeighborIndex:
    """Euclidean k-NN lists for every point, excluding the point itself.

    Squared distances are compared exactly, and a stable sort breaks distance
    ties by ascending point id.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    if k < 1:
        raise ConfigurationError("k must be positive")
    if k >= n:
        raise ConfigurationError(f"k={k} must be smaller than the number of points {n}")
    if not np.all(np.isfinite(pts)):
        raise InputError("feature vectors must be finite")
    out = np.empty((n, k), dtype=np.int64)
    for start in range(0, n, _CHUNK):
        block = pts[start:start + _CHUNK]
        d2 = ((block[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        rows = np.arange(block.shape[0])
        d2[rows, start + rows] = np.inf
        order = np.argsort(d2, axis=1, kind="stable")
        out[start:start + block.shape[0]] = order[:, :k]
    return NeighborIndex.from_neighbors(out)


class KnnState:
    """Mutable labeled/unlabeled state of the k-NN model.

    ``alpha[x]`` and ``beta[x]`` are the positive and total counts of labeled
    neighbors of ``x``. Labels are stored as -1 (unlabeled), 0 or 1.
    """

    nontarget_monotone = True

    def __init__(self, index: NeighborIndex, gamma: float = DEFAULT_GAMMA):
        if not 0.0 <= gamma <= 1.0:
            raise ConfigurationError(f"gamma must lie in [0, 1], got {gamma}")
        self.index = index
        self.gamma = float(gamma)
        n = index.n_points
        self.alpha = [0] * n
        self.beta = [0] * n
        self.labels = [-1] * n
        self._reverse = index.reverse
        self._n_labeled = 0

    @property
    def n_points(self) -> int:
        return len(self.labels)

    @property
    def labeled(self) -> dict:
        return {x: y for x, y in enumerate(self.labels) if y >= 0}

    def unlabeled(self) -> list:
        return [x for x, y in enumerate(self.labels) if y < 0]

    def n_unlabeled(self) -> int:
        return len(self.labels) - self._n_labeled

    def label_of(self, x):
        y = self.labels[x]
        return None if y < 0 else y

    def posterior(self, x: int) -> float:
        if self.labels[x] >= 0:
            raise UsageError(f"point {x} is already labeled")
        return (self.gamma + self.alpha[x]) / (1 + self.beta[x])

    def posteriors(self) -> dict:
        """Posterior of every unlabeled point, keyed by id."""
        g = self.gamma
        a, b = self.alpha, self.beta
        return {x: (g + a[x]) / (1 + b[x]) for x, y in enumerate(self.labels) if y < 0}

    def condition(self, x: int, y: int):
        if y not in (0, 1):
            raise InputError(f"labels must be 0 or 1, got {y!r}")
        if self.labels[x] >= 0:
            raise UsageError(f"point {x} is already labeled")
        self.labels[x] = y
        self._n_labeled += 1
        alpha, beta = self.alpha, self.beta
        for a in self._reverse[x]:
            beta[a] += 1
            alpha[a] += y
        return (x, y)

    def undo(self, token) -> None:
        x, y = token
        if self.labels[x] != y:
            raise UsageError(f"undo token {token} does not match the state")
        self.labels[x] = -1
        self._n_labeled -= 1
        alpha, beta = self.alpha, self.beta
        for a in self._reverse[x]:
            beta[a] -= 1
            alpha[a] -= y

    def probability_upper_bound(self, n: int) -> float:
        """Largest posterior reachable after at most ``n`` more positives."""
        if n < 0:
            raise ConfigurationError("n must be non-negative")
        g = self.gamma
        a, b = self.alpha, self.beta
        best = -1.0
        for x, y in enumerate(self.labels):
            if y < 0:
                p = (g + a[x] + n) / (1 + b[x] + n)
                if p > best:
                    best = p
        if best < 0:
            raise DomainExhausted("no unlabeled points")
        return best

    def recount(self):
        """Recompute (alpha, beta) from scratch from the labels."""
        alpha = [0] * self.n_points
        beta = [0] * self.n_points
        for x, row in enumerate(self.index.neighbors):
            for j in row:
                y = self.labels[j]
                if y >= 0:
                    beta[x] += 1
                    alpha[x] += y
        return alpha, beta

    def snapshot(self):
        return (self.gamma, tuple(self.labels), tuple(self.alpha), tuple(self.beta))

    def copy(self) -> "KnnState":
        other = KnnState.__new__(KnnState)
        other.index = self.index
        other.gamma = self.gamma
        other.alpha = list(self.alpha)
        other.beta = list(self.beta)
        other.labels = list(self.labels)
        other._reverse = self._reverse
        other._n_labeled = self._n_labeled
        return other

    def __repr__(self):
        return f"KnnState(n={self.n_points}, k={self.index.k}, labeled={self._n_labeled}, gamma={self.gamma})"


def posterior(state, x: int) -> float:
    """Posterior target probability of unlabeled point ``x``."""
    return state.posterior(x)


def condition(state, x: int, y: int):
    """Condition ``state`` in place on ``(x, y)``; returns the undo token."""
    return state.condition(x, y)


def probability_upper_bound(state, n: int) -> float:
    return state.probability_upper_bound(n)
