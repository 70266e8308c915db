"""Bayesian optimal active search and active surveying.

The search policies look ``l`` steps ahead over a posterior model and can
prune provably suboptimal candidates without changing the decision. The
k-NN model ships with a compiled search kernel; ``BACKEND`` reports whether
it is in use or the pure-Python engine was selected.
"""

from ._backend import DEFAULT_BACKEND as BACKEND, HAVE_COMPILED
from .clumps import (
    ClumpModel,
    ClumpSpace,
    clump_difference,
    eq2_value,
    eq3_bound,
    exact_policy_value,
    lemma1_crossover,
    theorem1_ratio_bound,
)
from .errors import (
    ActiveSearchError,
    ConfigurationError,
    DomainExhausted,
    InfeasibleMoments,
    InputError,
    ParseError,
    UsageError,
)
from .harness import Dataset, generate_disks, load_dataset, save_dataset
from .knn import KnnState, NeighborIndex, build_neighbor_index
from .policy import (
    EpisodeTrace,
    PolicyConfig,
    expected_search_utility,
    run_episode,
    select_random,
    select_search,
    select_uncertainty,
)
from .pruning import greedy_lower_bound, pruned_select, search_decision
from .surveying import (
    beta_density,
    beta_moment_match,
    count_posterior,
    expected_survey_utility,
    select_survey,
    subsampled_count_posterior,
)

__version__ = "0.1.0"
