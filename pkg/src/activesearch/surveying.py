"""Active surveying: estimating how many targets the data set holds.

The models only provide marginal posteriors, so the distribution of the
target count treats the unlabeled labels as conditionally independent
Bernoulli variables given the observations. Under that convention

    mean = observed targets + sum(p_i),  variance = sum(p_i * (1 - p_i))

over unlabeled points. The one-step optimal surveying policy queries the
point whose label is expected to shrink this variance the most.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateMoments,
    DomainExhausted,
    InfeasibleMoments,
    UsageError,
)
from .knn import KnnState

DEFAULT_FRACTION = 0.05
DEFAULT_REPEATS = 5


@dataclass(frozen=True)
class SurveyPosterior:
    """Moments of the target count and the beta fit to the class proportion.

    ``a`` and ``b`` are None when the moments admit no beta distribution.
    """

    mean: float
    variance: float
    proportion_mean: float
    proportion_variance: float
    a: float | None
    b: float | None

    @classmethod
    def from_count_moments(cls, mean, variance, n_points):
        m = mean / n_points
        v = variance / n_points**2
        try:
            a, b = beta_moment_match(m, v)
        except InfeasibleMoments:
            a = b = None
        return cls(mean, variance, m, v, a, b)

    def density_at(self, proportion):
        """Beta density at ``proportion``, or None when no beta fit exists."""
        if self.a is None:
            return None
        return beta_density(self.a, self.b, proportion)


def _observed_targets(state) -> int:
    if isinstance(state, KnnState):
        return state.labels.count(1)
    return sum(1 for x in range(state.n_points) if state.label_of(x) == 1)


def count_posterior(state):
    """(mean, variance) of the number of targets in the whole data set."""
    mean = float(_observed_targets(state))
    var = 0.0
    for x in state.unlabeled():
        p = state.posterior(x)
        mean += p
        var += p * (1.0 - p)
    return mean, var


def _knn_variance_after(state: KnnState, x, y, var_before, p_x):
    # only x itself and its unlabeled reverse neighbors change posterior
    g = state.gamma
    alpha, beta, labels = state.alpha, state.beta, state.labels
    delta = -p_x * (1.0 - p_x)
    for a in state.index.reverse[x]:
        if labels[a] < 0:
            p = (g + alpha[a]) / (1 + beta[a])
            q = (g + alpha[a] + y) / (2 + beta[a])
            delta += q * (1.0 - q) - p * (1.0 - p)
    return var_before + delta


def _expected_variance(state, x, var_before=None):
    p = state.posterior(x)
    if isinstance(state, KnnState):
        if var_before is None:
            var_before = count_posterior(state)[1]
        v1 = _knn_variance_after(state, x, 1, var_before, p) if p > 0.0 else 0.0
        v0 = _knn_variance_after(state, x, 0, var_before, p) if p < 1.0 else 0.0
    else:
        v1 = v0 = 0.0
        if p > 0.0:
            token = state.condition(x, 1)
            v1 = count_posterior(state)[1]
            state.undo(token)
        if p < 1.0:
            token = state.condition(x, 0)
            v0 = count_posterior(state)[1]
            state.undo(token)
    return p * v1 + (1.0 - p) * v0


def expected_survey_utility(state, x: int) -> float:
    """Negative expected variance of the target count after querying ``x``."""
    if state.label_of(x) is not None:
        raise UsageError(f"point {x} is already labeled")
    return -_expected_variance(state, x)


def select_survey(state) -> int:
    """One-step optimal surveying query (lowest id on ties)."""
    candidates = state.unlabeled()
    if not candidates:
        raise DomainExhausted("no unlabeled points")
    var_before = count_posterior(state)[1] if isinstance(state, KnnState) else None
    best, best_u = -1, -math.inf
    for x in candidates:
        u = -_expected_variance(state, x, var_before)
        if u > best_u:
            best, best_u = x, u
    return best


def subsampled_count_posterior(state, fraction=DEFAULT_FRACTION, repeats=DEFAULT_REPEATS, rng=None):
    """Count moments estimated from random subsamples of the unlabeled points.

    Each repeat draws ``ceil(fraction * U)`` of the ``U`` unlabeled points
    without replacement and scales the subsample sums by ``U / size``; the
    returned moments are averages over repeats. ``fraction=1`` is exact.
    """
    if not 0.0 < fraction <= 1.0:
        raise ConfigurationError(f"fraction must lie in (0, 1], got {fraction}")
    if repeats < 1:
        raise ConfigurationError("repeats must be at least 1")
    unlabeled = state.unlabeled()
    size = math.ceil(fraction * len(unlabeled))
    if size == 0:
        raise ConfigurationError("subsample is empty")
    if fraction == 1.0:
        return count_posterior(state)
    rng = np.random.default_rng(rng)
    observed = float(_observed_targets(state))
    scale = len(unlabeled) / size
    pool = np.asarray(unlabeled)
    means = []
    variances = []
    for _ in range(repeats):
        sample = np.sort(rng.choice(pool, size=size, replace=False))
        s = 0.0
        v = 0.0
        for x in sample.tolist():
            p = state.posterior(x)
            s += p
            v += p * (1.0 - p)
        means.append(observed + s * scale)
        variances.append(v * scale)
    return math.fsum(means) / repeats, math.fsum(variances) / repeats


def beta_moment_match(m: float, v: float):
    """Beta parameters (a, b) with mean ``m`` and variance ``v``."""
    if v <= 0.0:
        raise DegenerateMoments(f"variance must be positive, got {v}")
    if not 0.0 < m < 1.0:
        raise InfeasibleMoments(f"mean must lie in (0, 1), got {m}")
    if v >= m * (1.0 - m):
        raise InfeasibleMoments(f"variance {v} is not below m(1 - m) = {m * (1.0 - m)}")
    c = m * (1.0 - m) / v - 1.0
    return m * c, (1.0 - m) * c


def beta_density(a: float, b: float, x: float) -> float:
    if a <= 0 or b <= 0:
        raise ConfigurationError("beta parameters must be positive")
    if not 0.0 < x < 1.0:
        raise ConfigurationError(f"beta density is evaluated on (0, 1), got {x}")
    log_b = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    return math.exp((a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - log_b)
