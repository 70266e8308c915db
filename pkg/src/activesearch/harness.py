"""Data sets, experiment orchestration and CSV output.

Every experiment derives one child seed per repeat from the master seed
(``numpy.random.SeedSequence.spawn``), so repeats are independent, can run
in any order or in parallel, and the written files depend only on the
configuration. Files carry no timestamps; wall-clock timings are written
only when explicitly requested.
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .clumps import (
    ClumpSpace,
    clump_difference,
    eq2_value,
    eq3_bound,
    exact_policy_value,
    lemma1_crossover,
    load_clump_space,
    theorem1_ratio_bound,
)
from .errors import ActiveSearchError, ConfigurationError, InputError, NoCrossoverFound, ParseError
from .knn import DEFAULT_GAMMA, KnnState, build_neighbor_index
from .policy import POLICIES, PolicyConfig, run_episode
from .pruning import search_decision
from .surveying import DEFAULT_FRACTION, DEFAULT_REPEATS, SurveyPosterior, subsampled_count_posterior

log = logging.getLogger(__name__)

DISK_CENTERS = ((0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0), (0.5, 0.5))
DISK_RADIUS = 0.25
DEFAULT_K = 50


@dataclass
class Dataset:
    """Points with hidden binary labels; ids are the row numbers."""

    features: np.ndarray
    labels: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim == 1:
            self.features = self.features[:, None]
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.shape[0] != self.labels.shape[0]:
            raise InputError("one label per point is required")
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise InputError("labels must be 0 or 1")
        if not np.all(np.isfinite(self.features)):
            raise InputError("features must be finite")

    @property
    def n_points(self) -> int:
        return self.labels.shape[0]

    @property
    def prevalence(self) -> float:
        return int(self.labels.sum()) / self.n_points


def disk_label(point) -> int:
    """1 when ``point`` lies strictly within 1/4 of a corner or the center."""
    x, y = point
    r2 = DISK_RADIUS * DISK_RADIUS
    return int(any((x - cx) ** 2 + (y - cy) ** 2 < r2 for cx, cy in DISK_CENTERS))


def generate_disks(n: int, seed=None) -> Dataset:
    """``n`` uniform points in the unit square labeled by :func:`disk_label`."""
    if n < 1:
        raise ConfigurationError("n must be positive")
    pts = np.random.default_rng(seed).random((n, 2))
    labels = [disk_label(p) for p in pts.tolist()]
    return Dataset(pts, labels, f"disks:{n}")


def load_dataset(path) -> Dataset:
    """Read an ``id,f1,...,fd,label`` CSV file."""
    path = Path(path)
    feats, labels = [], []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("empty file", 1)
        header = [h.strip() for h in header]
        if len(header) < 3 or header[0] != "id" or header[-1] != "label":
            raise ParseError("header must be id,f1,...,fd,label", 1)
        width = len(header)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise ParseError(f"expected {width} fields, got {len(row)}", lineno)
            try:
                pid = int(row[0])
                vec = [float(v) for v in row[1:-1]]
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if pid != len(labels):
                raise ParseError(f"ids must be dense and ordered; expected {len(labels)}, got {pid}", lineno)
            if not all(math.isfinite(v) for v in vec):
                raise ParseError("non-finite feature", lineno)
            lab = row[-1].strip()
            if lab not in ("0", "1"):
                raise ParseError(f"label must be 0 or 1, got {lab!r}", lineno)
            feats.append(vec)
            labels.append(int(lab))
    if not labels:
        raise ParseError("no data rows", 2)
    return Dataset(np.array(feats), labels, str(path))


def save_dataset(dataset: Dataset, path) -> None:
    d = dataset.features.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id"] + [f"f{j + 1}" for j in range(d)] + ["label"])
        for i, (vec, y) in enumerate(zip(dataset.features.tolist(), dataset.labels.tolist())):
            w.writerow([i] + [repr(float(v)) for v in vec] + [y])


def resolve_data(spec: str, seed=None) -> Dataset:
    """``disks:N`` draws a synthetic set from ``seed``; anything else is a file path."""
    if spec.startswith("disks:"):
        try:
            n = int(spec.split(":", 1)[1])
        except ValueError:
            raise ConfigurationError(f"bad generator spec {spec!r}") from None
        return generate_disks(n, seed)
    path = Path(spec)
    if not path.exists():
        raise ConfigurationError(f"data file {spec!r} does not exist")
    return load_dataset(path)


@dataclass
class ExperimentConfig:
    data: str = "disks:250"
    policy: str = "search"
    lookahead: int = 1
    budget: int = 100
    k: int = DEFAULT_K
    gamma: float = DEFAULT_GAMMA
    prune: bool = True
    tighten: bool = True
    seed_target: bool = True
    repeats: int = 1
    seed: int = 0
    out: str = "results"
    fraction: float = DEFAULT_FRACTION
    eval_repeats: int = DEFAULT_REPEATS
    lookahead_max: int = 3
    timing: bool = False
    backend: str | None = None
    jobs: int = 1

    def validate(self):
        if self.policy not in POLICIES:
            raise ConfigurationError(f"policy must be one of {POLICIES}")
        if self.lookahead < 1 or self.lookahead_max < 1:
            raise ConfigurationError("lookahead must be at least 1")
        if self.budget < 0 or self.repeats < 1 or self.k < 1 or self.jobs < 1:
            raise ConfigurationError("budget must be >= 0; repeats, k and jobs >= 1")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError("gamma must lie in [0, 1]")
        if not 0.0 < self.fraction <= 1.0 or self.eval_repeats < 1:
            raise ConfigurationError("fraction must lie in (0, 1] and eval repeats be >= 1")
        if not self.data.startswith("disks:") and not Path(self.data).exists():
            raise ConfigurationError(f"data file {self.data!r} does not exist")


@dataclass
class ExperimentResult:
    files: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def repeat_seeds(master: int, repeats: int):
    """Three independent integer seeds (data, policy, evaluation) per repeat."""
    children = np.random.SeedSequence(master).spawn(repeats)
    return [tuple(int(s) for s in c.generate_state(3)) for c in children]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _model_for(config: ExperimentConfig, data_seed):
    data = resolve_data(config.data, data_seed)
    index = build_neighbor_index(data.features, config.k)
    return data, KnnState(index, config.gamma)


def _map(func, items, jobs):
    if jobs <= 1:
        return [func(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


def _search_repeat(args):
    config, r, (data_seed, policy_seed, _) = args
    try:
        data, state = _model_for(config, data_seed)
        pc = PolicyConfig(config.lookahead, config.budget, config.prune, config.tighten,
                          policy_seed, config.seed_target, config.backend)
        trace = run_episode(state, data.labels, config.policy, pc)
    except (ConfigurationError, InputError):
        raise
    except ActiveSearchError as exc:
        return None, (r, type(exc).__name__, str(exc))
    prev = data.prevalence
    rows = [(r, s.step, s.point, s.label, s.posterior, s.cumulative, s.step * prev, s.expansions)
            for s in trace.steps]
    return rows, None


def run_search_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Search episodes; per-step and summary CSVs plus the random-sampling line."""
    config.validate()
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = repeat_seeds(config.seed, config.repeats)
    results = _map(_search_repeat, [(config, r, s) for r, s in enumerate(seeds)], config.jobs)
    result = ExperimentResult()
    rows = []
    for r_rows, err in results:
        if err is not None:
            result.errors.append(err)
        else:
            rows.extend(r_rows)
    steps_path = out / "search_steps.csv"
    _write_csv(steps_path, ["repeat", "step", "point", "label", "posterior", "cumulative",
                            "random_expectation", "expansions"], rows)
    summary = []
    by_step = {}
    for row in rows:
        by_step.setdefault(row[1], []).append(row)
    for step in sorted(by_step):
        group = by_step[step]
        summary.append((step, len(group),
                        math.fsum(g[5] for g in group) / len(group),
                        math.fsum(g[6] for g in group) / len(group)))
    summary_path = out / "search_summary.csv"
    _write_csv(summary_path, ["step", "repeats", "mean_cumulative", "random_expectation"], summary)
    result.files.update(steps=steps_path, summary=summary_path)
    _finish(result, out)
    return result


def _survey_repeat(args):
    config, r, (data_seed, policy_seed, eval_seed) = args
    try:
        data, state = _model_for(config, data_seed)
        truth = data.prevalence
        eval_rng = np.random.default_rng(eval_seed)
        rows = []

        def observe(st, rec):
            mean, var = subsampled_count_posterior(st, config.fraction, config.eval_repeats, eval_rng)
            post = SurveyPosterior.from_count_moments(mean, var, data.n_points)
            density = post.density_at(truth) if 0.0 < truth < 1.0 else None
            if post.a is None:
                log.info("repeat %d step %d: moments admit no beta fit; skipped", r, rec.step)
            rows.append((r, rec.step, rec.point, rec.label, mean, var, post.a, post.b, density))

        pc = PolicyConfig(1, config.budget, False, True, policy_seed, config.seed_target, config.backend)
        run_episode(state, data.labels, config.policy, pc, observer=observe)
    except (ConfigurationError, InputError):
        raise
    except ActiveSearchError as exc:
        return None, (r, type(exc).__name__, str(exc))
    return rows, None


def run_survey_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Surveying episodes with the subsampled beta evaluation after each query."""
    config.validate()
    if config.policy == "search":
        config = replace(config, policy="survey")
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = repeat_seeds(config.seed, config.repeats)
    results = _map(_survey_repeat, [(config, r, s) for r, s in enumerate(seeds)], config.jobs)
    result = ExperimentResult()
    rows = []
    for r_rows, err in results:
        if err is not None:
            result.errors.append(err)
        else:
            rows.extend(r_rows)
    steps_path = out / "survey_steps.csv"
    _write_csv(steps_path, ["repeat", "step", "point", "label", "mean", "variance", "a", "b",
                            "density"], rows)
    by_step = {}
    for row in rows:
        by_step.setdefault(row[1], []).append(row)
    summary = []
    for step in sorted(by_step):
        group = by_step[step]
        dens = [g[8] for g in group if g[8] is not None]
        summary.append((step, len(group), len(dens),
                        math.fsum(dens) / len(dens) if dens else None,
                        math.fsum(g[4] for g in group) / len(group),
                        math.fsum(g[5] for g in group) / len(group)))
    summary_path = out / "survey_summary.csv"
    _write_csv(summary_path, ["step", "repeats", "fitted", "mean_density", "mean_count",
                              "mean_variance"], summary)
    result.files.update(steps=steps_path, summary=summary_path)
    _finish(result, out)
    return result


def _bench_repeat(args):
    config, r, (data_seed, policy_seed, _) = args
    rows, timings = [], []
    try:
        data, state = _model_for(config, data_seed)
        rng = np.random.default_rng(policy_seed)
        if config.seed_target:
            targets = np.flatnonzero(data.labels == 1)
            if targets.size:
                state.condition(int(targets[rng.integers(targets.size)]), 1)
        for ell in range(2, config.lookahead_max + 1):
            pruned = search_decision(state, ell, True, config.tighten, config.backend)
            full = search_decision(state, ell, False, config.tighten, config.backend)
            rows.append((r, ell, pruned.point, full.point, pruned.value, full.value,
                         pruned.expansions, full.expansions, int(pruned.point == full.point)))
            timings.append((r, ell, pruned.seconds, full.seconds))
    except (ConfigurationError, InputError):
        raise
    except ActiveSearchError as exc:
        return None, None, (r, type(exc).__name__, str(exc))
    return rows, timings, None


def run_prune_benchmark(config: ExperimentConfig) -> ExperimentResult:
    """One selection per repeat and horizon, with and without pruning."""
    config.validate()
    if config.lookahead_max < 2:
        raise ConfigurationError("the pruning benchmark needs lookahead-max >= 2")
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = repeat_seeds(config.seed, config.repeats)
    results = _map(_bench_repeat, [(config, r, s) for r, s in enumerate(seeds)], config.jobs)
    result = ExperimentResult()
    rows, timings = [], []
    for r_rows, r_times, err in results:
        if err is not None:
            result.errors.append(err)
        else:
            rows.extend(r_rows)
            timings.extend(r_times)
    bench_path = out / "prune_bench.csv"
    _write_csv(bench_path, ["repeat", "ell", "point_pruned", "point_unpruned", "value_pruned",
                            "value_unpruned", "expansions_pruned", "expansions_unpruned", "agree"],
               rows)
    summary = []
    for ell, group in itertools.groupby(sorted(rows, key=lambda x: x[1]), key=lambda x: x[1]):
        group = list(group)
        mp = math.fsum(g[6] for g in group) / len(group)
        mu = math.fsum(g[7] for g in group) / len(group)
        summary.append((ell, len(group), mp, mu, mu / mp if mp else None,
                        int(all(g[8] for g in group))))
    summary_path = out / "prune_summary.csv"
    _write_csv(summary_path, ["ell", "repeats", "mean_expansions_pruned",
                              "mean_expansions_unpruned", "expansion_ratio", "all_agree"], summary)
    result.files.update(bench=bench_path, summary=summary_path)
    if config.timing:
        timing_path = out / "prune_timing.csv"
        _write_csv(timing_path, ["repeat", "ell", "seconds_pruned", "seconds_unpruned"], timings)
        result.files["timing"] = timing_path
    for row in rows:
        if not row[8]:
            result.errors.append((row[0], "PruningMismatch", f"ell={row[1]}: {row[2]} != {row[3]}"))
    _finish(result, out)
    return result


def parse_sweep(spec: str) -> dict:
    """Parse ``eps=0.01,0.02;delta=0.05;t=10:100:3`` into value lists.

    ``lo:hi:num`` expands to ``num`` evenly spaced values (rounded for the
    integer keys ``ell``, ``m`` and ``t``).
    """
    grid = {}
    for part in filter(None, (p.strip() for p in spec.split(";"))):
        if "=" not in part:
            raise ConfigurationError(f"sweep entry {part!r} lacks '='")
        key, values = (s.strip() for s in part.split("=", 1))
        if key not in ("eps", "delta", "ell", "m", "t"):
            raise ConfigurationError(f"unknown sweep key {key!r}")
        conv = int if key in ("ell", "m", "t") else float
        try:
            if ":" in values:
                lo, hi, num = values.split(":")
                vals = np.linspace(float(lo), float(hi), int(num)).tolist()
                vals = [int(round(v)) if conv is int else v for v in vals]
            else:
                vals = [conv(v) for v in values.split(",")]
        except ValueError as exc:
            raise ConfigurationError(f"bad sweep values for {key}: {exc}") from None
        grid[key] = vals
    return grid


# exact DP on separating spaces is only attempted up to this many points
DP_POINT_LIMIT = 40


def clump_analysis_rows(space=None, ell=1, m=2, t=None, sweep=None):
    """Rows ``(kind, eps, delta, ell, m, t, value)`` for the clump analyses."""
    rows = []
    if space is not None:
        t_eff = space.n_points if t is None else t
        v_ell = exact_policy_value(space, ell, t_eff)
        v_m = exact_policy_value(space, m, t_eff)
        rows.append(("policy_value", None, None, ell, None, t_eff, v_ell))
        rows.append(("policy_value", None, None, m, None, t_eff, v_m))
        rows.append(("policy_ratio", None, None, ell, m, t_eff, v_m / v_ell if v_ell else None))
    if sweep:
        grid = {"ell": [ell], "m": [m], "t": [t if t is not None else 10]}
        grid.update(sweep)
        for eps, delta, ell_, m_, t_ in itertools.product(
                grid.get("eps", [0.01]), grid.get("delta", [0.02]), grid["ell"], grid["m"], grid["t"]):
            if not 0.0 < eps < delta < 1.0:
                continue
            rows.append(("eq2_value", eps, None, None, None, t_, eq2_value(eps, t_)))
            rows.append(("eq3_bound", None, delta, ell_, None, t_, eq3_bound(delta, ell_, t_)))
            rows.append(("ratio_bound", eps, delta, ell_, None, t_,
                         theorem1_ratio_bound(eps, delta, ell_, t_)))
            rows.append(("clump_difference", eps, delta, ell_, None, None,
                         clump_difference(eps, delta, ell_)))
            if ell_ < m_ <= t_:
                try:
                    rows.append(("crossover_eps", None, delta, ell_, m_, t_,
                                 lemma1_crossover(ell_, m_, t_, delta)))
                except NoCrossoverFound:
                    rows.append(("crossover_eps", None, delta, ell_, m_, t_, None))
            space_ = ClumpSpace.separating(eps, delta, ell_, t_)
            if space_.n_points <= DP_POINT_LIMIT:
                rows.append(("dp_value", eps, delta, ell_, None, t_, exact_policy_value(space_, ell_, t_)))
                if ell_ < m_:
                    rows.append(("dp_value", eps, delta, m_, None, t_, exact_policy_value(space_, m_, t_)))
    return rows


def run_clump_analysis(space_path=None, ell=1, m=2, t=None, sweep=None, out="results") -> ExperimentResult:
    if space_path is None and not sweep:
        raise ConfigurationError("give a clump space file, a sweep, or both")
    if ell < 1 or m <= ell:
        raise ConfigurationError("need 1 <= ell < m")
    space = load_clump_space(space_path) if space_path is not None else None
    grid = parse_sweep(sweep) if sweep else None
    rows = clump_analysis_rows(space, ell, m, t, grid)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "clump_analysis.csv"
    _write_csv(path, ["kind", "eps", "delta", "ell", "m", "t", "value"], rows)
    result = ExperimentResult(files={"analysis": path})
    return result


def _finish(result: ExperimentResult, out: Path) -> None:
    err_path = out / "errors.csv"
    if result.errors:
        _write_csv(err_path, ["repeat", "error", "message"], result.errors)
        result.files["errors"] = err_path
    elif err_path.exists():
        err_path.unlink()
