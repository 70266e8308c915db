"""Query-selection policies and the episode runner.

The search policy maximises the expected number of targets found over the
next ``horizon`` queries. With one query left this is simply the point with
the largest posterior. With more, the value of a candidate is

    p * (1 + V1) + (1 - p) * V0

where ``V1``/``V0`` are the best values one step shorter after a fictitious
positive/negative at the candidate; the next query is determined by the
outcome, so the recursion is an argmax rather than an integral.

All selections break ties toward the lowest point id.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import ConfigurationError, DomainExhausted, UsageError
from .pruning import search_decision
from .surveying import select_survey

POLICIES = ("search", "survey", "uncertainty", "random")


@dataclass
class PolicyConfig:
    """Settings for one episode.

    The horizon used at each step is ``min(horizon, remaining budget)``.
    ``tighten`` raises the pruning incumbent as better candidates are found;
    turn it off to prune against the greedy point's value only.
    """

    horizon: int = 1
    budget: int = 10
    prune: bool = True
    tighten: bool = True
    seed: int = 0
    seed_target: bool = True
    backend: str | None = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigurationError("horizon must be at least 1")
        if self.budget < 0:
            raise ConfigurationError("budget must be non-negative")


@dataclass(frozen=True)
class StepRecord:
    step: int
    point: int
    label: int
    posterior: float
    cumulative: int
    expansions: int = 0


@dataclass
class EpisodeTrace:
    """What happened during one run of a policy.

    ``seed_point`` is the target revealed before the first query (or None);
    it does not count toward ``utility``.
    """

    policy: str
    steps: list = field(default_factory=list)
    seed_point: int | None = None

    @property
    def utility(self) -> int:
        return self.steps[-1].cumulative if self.steps else 0

    @property
    def points(self):
        return [s.point for s in self.steps]


def expected_search_utility(state, x: int, horizon: int, backend=None) -> float:
    """Expected targets found over ``horizon`` queries starting with ``x``.

    The state is left exactly as it was found.
    """
    if horizon < 1:
        raise UsageError("horizon must be at least 1")
    if state.label_of(x) is not None:
        raise UsageError(f"point {x} is already labeled")
    return _backend.lookahead_value(state, x, horizon, backend=backend)[0]


def effective_horizon(config: PolicyConfig, remaining=None) -> int:
    if remaining is None:
        return config.horizon
    return max(1, min(config.horizon, remaining))


def select_search(state, config: PolicyConfig, remaining=None) -> int:
    """The point maximising the lookahead value at the effective horizon."""
    h = effective_horizon(config, remaining)
    return search_decision(state, h, config.prune, config.tighten, config.backend).point


def select_uncertainty(state) -> int:
    """Point whose posterior is closest to 1/2."""
    best, best_d = -1, 2.0
    for x in state.unlabeled():
        d = abs(state.posterior(x) - 0.5)
        if d < best_d:
            best, best_d = x, d
    if best < 0:
        raise DomainExhausted("no unlabeled points")
    return best


def select_random(state, rng) -> int:
    """Uniformly random unlabeled point drawn from a numpy Generator."""
    candidates = state.unlabeled()
    if not candidates:
        raise DomainExhausted("no unlabeled points")
    return candidates[int(rng.integers(len(candidates)))]


def run_episode(state, labels, policy: str, config: PolicyConfig, rng=None, observer=None) -> EpisodeTrace:
    """Run ``policy`` for ``config.budget`` queries, revealing ``labels``.

    ``state`` is conditioned in place. When ``config.seed_target`` is set a
    random target is revealed first. ``observer(state, record)`` is called
    after every query.
    """
    if policy not in POLICIES:
        raise ConfigurationError(f"unknown policy {policy!r}; choose from {POLICIES}")
    labels = [int(y) for y in labels]
    if len(labels) != state.n_points:
        raise ConfigurationError("one hidden label per point is required")
    rng = np.random.default_rng(config.seed if rng is None else rng)
    trace = EpisodeTrace(policy)
    if config.seed_target:
        targets = [x for x in state.unlabeled() if labels[x] == 1]
        if not targets:
            raise ConfigurationError("cannot seed with a target: the data set has none unlabeled")
        trace.seed_point = targets[int(rng.integers(len(targets)))]
        state.condition(trace.seed_point, 1)
    pool = len(state.unlabeled())
    if config.budget > pool:
        raise ConfigurationError(f"budget {config.budget} exceeds the {pool} unlabeled points")

    found = 0
    for i in range(config.budget):
        remaining = config.budget - i
        expansions = 0
        if policy == "search":
            h = effective_horizon(config, remaining)
            decision = search_decision(state, h, config.prune, config.tighten, config.backend)
            x, expansions = decision.point, decision.expansions
        elif policy == "survey":
            x = select_survey(state)
        elif policy == "uncertainty":
            x = select_uncertainty(state)
        else:
            x = select_random(state, rng)
        p = state.posterior(x)
        y = labels[x]
        state.condition(x, y)
        found += y
        record = StepRecord(i + 1, x, y, p, found, expansions)
        trace.steps.append(record)
        if observer is not None:
            observer(state, record)
    return trace
