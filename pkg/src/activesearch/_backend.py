"""Chooses between the compiled k-NN kernel and the pure-Python engine.

The choice is made once at import. Set ``ACTIVESEARCH_BACKEND=python`` to
force the fallback even when the extension is built.
"""

import os

try:
    from ._knn_core import KnnSearchCore
except ImportError:  # extension not built
    KnnSearchCore = None

HAVE_COMPILED = KnnSearchCore is not None

_requested = os.environ.get("ACTIVESEARCH_BACKEND", "auto").lower()
if _requested not in ("auto", "compiled", "python"):
    raise ImportError(f"ACTIVESEARCH_BACKEND must be auto, compiled or python, not {_requested!r}")
if _requested == "compiled" and not HAVE_COMPILED:
    raise ImportError("ACTIVESEARCH_BACKEND=compiled but the extension is not built")

DEFAULT_BACKEND = "compiled" if HAVE_COMPILED and _requested != "python" else "python"


def resolve(backend=None) -> str:
    """Normalise a per-call backend request to ``"compiled"`` or ``"python"``."""
    if backend is None or backend == "auto":
        return DEFAULT_BACKEND
    if backend == "compiled" and not HAVE_COMPILED:
        raise RuntimeError("compiled backend requested but the extension is not built")
    if backend not in ("compiled", "python"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend


def _core_for(state):
    import numpy as np

    index = state.index
    return KnnSearchCore(
        state.gamma,
        np.array(state.alpha, dtype=np.int64),
        np.array(state.beta, dtype=np.int64),
        np.array(state.labels, dtype=np.int8),
        index.rev_ptr,
        index.rev_idx,
    )


def _use_compiled(state, backend) -> bool:
    from .knn import KnnState

    return resolve(backend) == "compiled" and type(state) is KnnState


def lookahead_value(state, x, h, ustar=None, tighten=True, backend=None):
    """(value, expansions) of querying ``x`` with ``h`` steps left."""
    if _use_compiled(state, backend):
        core = _core_for(state)
        v = core.value(x, h, ustar, tighten)
        return v, core.expansions
    from ._engine import Expectimax

    engine = Expectimax(state, ustar, tighten)
    v = engine.value(x, h)
    return v, engine.expansions


def lookahead_best(state, h, ustar=None, tighten=True, backend=None):
    """(argmax, max, expansions) of the h-step value; argmax is -1 if exhausted."""
    if _use_compiled(state, backend):
        core = _core_for(state)
        x, v = core.best(h, ustar, tighten)
        return int(x), v, core.expansions
    from ._engine import Expectimax

    engine = Expectimax(state, ustar, tighten)
    x, v = engine.best(h)
    return x, v, engine.expansions
