"""Monte Carlo driver for coverage, level, power and running-time studies.

Every replication simulates raw data from the true model, privatizes it, and
hands only the release to FIMA; classical baselines see the raw data. Each
replication owns the random stream ``SeedSequence(seed, spawn_key=(g, b))``
for grid point ``g`` and replication ``b``, so results do not depend on how
replications are split across worker processes.
"""

from __future__ import annotations

import csv
import enum
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import baselines
from .chisq import TABLE_SENSITIVITY, ContingencyTable, fima_chisq_test
from .core import FimaConfig, fima_sample
from .inference import Direction, Sided, one_sample_test, percentile_ci, two_sample_test
from .logistic import LogisticDesign, logistic_inference
from .mechanisms import NoiseFamily, PrivacyParams, privatize_counts, privatize_proportions


class Task(str, enum.Enum):
    ONE_SAMPLE_CI = "one-sample-ci"
    ONE_SAMPLE_TEST = "one-sample-test"
    TWO_SAMPLE_TEST = "two-sample-test"
    CHISQ_TEST = "chisq-test"
    LOGISTIC_CI = "logistic-ci"
    RUNNING_TIME = "running-time"


FIMA = "fima"
NP_Z = "np-z"
EXACT = "exact"
NP_CHISQ = "np-chisq"

DEFAULT_BASELINES = {
    Task.ONE_SAMPLE_CI: (NP_Z, EXACT),
    Task.ONE_SAMPLE_TEST: (NP_Z, EXACT),
    Task.TWO_SAMPLE_TEST: (NP_Z,),
    Task.CHISQ_TEST: (NP_CHISQ,),
    Task.LOGISTIC_CI: (),
    Task.RUNNING_TIME: (NP_Z, EXACT),
}
CHISQ_DIRECTION = np.array([1.0, -1.0, -1.0, 1.0])
CSV_HEADER = ["method", "task", "n", "epsilon", "theta", "gamma", "metric", "value", "stderr", "ms"]
BINARY_METRICS = ("coverage", "rejection_rate")


@dataclass(frozen=True)
class ExperimentSpec:
    """One simulation study.

    Grid axes by task:

    * one-sample-ci: ``n_values`` x ``thetas`` (true proportion).
    * one-sample-test: ``n_values`` x ``thetas`` x ``gammas``; ``gammas=None``
      tests at ``gamma = theta`` (level study).
    * two-sample-test: ``thetas`` are theta1, ``gammas`` are theta2;
      ``gammas=None`` sets theta2 = theta1.
    * chisq-test: ``thetas`` are shifts c in ``0.25 + c * [1, -1, -1, 1]``.
    * logistic-ci: ``thetas`` index nothing; cell probabilities come from
      ``cell_thetas`` and ``design``. Each cell gets ``n // n_cells`` records.
    * running-time: ``n_values`` only; ``B`` timed calls per method.
    """

    task: Task
    n_values: tuple = (30,)
    thetas: tuple = (0.5,)
    gammas: tuple | None = None
    epsilon: float = 1.0
    B: int = 2000
    H: int = 1000
    alpha: float = 0.05
    seed: int = 0
    baselines: tuple | None = None
    family: NoiseFamily = NoiseFamily.LAPLACE
    direction: Direction = Direction.LESS
    sided: Sided = Sided.TWO_SIDED
    design: str = "one-binary"
    cell_thetas: tuple = (0.3, 0.5)
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "task", Task(self.task))
        object.__setattr__(self, "family", NoiseFamily(self.family))
        object.__setattr__(self, "direction", Direction(self.direction))
        object.__setattr__(self, "sided", Sided(self.sided))
        for name in ("n_values", "thetas", "cell_thetas"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.gammas is not None:
            object.__setattr__(self, "gammas", tuple(self.gammas))
        if self.baselines is None:
            object.__setattr__(self, "baselines", DEFAULT_BASELINES[self.task])
        object.__setattr__(self, "baselines", tuple(self.baselines))
        if self.B < 1 or self.H < 1:
            raise ValueError("B and H must be at least 1")
        if not self.n_values or not self.thetas or (self.gammas is not None and not self.gammas):
            raise ValueError("grids must be nonempty")
        if self.task is Task.LOGISTIC_CI:
            d = make_design(self.design)
            if len(self.cell_thetas) != d.n_cells:
                raise ValueError(f"design {self.design} needs {d.n_cells} cell probabilities")

    @property
    def level(self) -> float:
        return 1 - self.alpha

    @property
    def methods(self) -> tuple:
        return (FIMA, *self.baselines)

    def grid(self) -> list[tuple[int, float, float | None]]:
        if self.task in (Task.RUNNING_TIME,):
            return [(n, math.nan, None) for n in self.n_values]
        if self.task in (Task.ONE_SAMPLE_TEST, Task.TWO_SAMPLE_TEST):
            if self.gammas is None:
                return [(n, t, t) for n, t in itertools.product(self.n_values, self.thetas)]
            return list(itertools.product(self.n_values, self.thetas, self.gammas))
        return [(n, t, None) for n, t in itertools.product(self.n_values, self.thetas)]


@dataclass(frozen=True)
class ExperimentRow:
    method: str
    task: str
    n: int
    epsilon: float
    theta: float
    gamma: float | None
    metric: str
    value: float
    stderr: float
    ms: float


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    rows: list[ExperimentRow] = field(default_factory=list)

    def select(self, **filters) -> list[ExperimentRow]:
        def ok(row):
            for key, want in filters.items():
                got = getattr(row, key)
                if isinstance(want, float) and isinstance(got, float):
                    if not math.isclose(got, want, abs_tol=1e-12):
                        return False
                elif got != want:
                    return False
            return True
        return [r for r in self.rows if ok(r)]

    def value(self, **filters) -> float:
        hits = self.select(**filters)
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} rows match {filters}")
        return hits[0].value

    def records(self) -> list[dict]:
        return [asdict(r) for r in self.rows]

    def to_csv(self, path_or_file) -> None:
        def write(f):
            w = csv.DictWriter(f, fieldnames=CSV_HEADER, lineterminator="\n")
            w.writeheader()
            for rec in self.records():
                w.writerow({k: ("NA" if isinstance(v, float) and math.isnan(v) else
                                "" if v is None else v) for k, v in rec.items()})
        if hasattr(path_or_file, "write"):
            write(path_or_file)
        else:
            with open(path_or_file, "w", newline="") as f:
                write(f)

    def to_json(self) -> dict:
        spec = {f.name: getattr(self.spec, f.name) for f in fields(self.spec)}
        spec = json.loads(json.dumps(spec, default=lambda o: getattr(o, "value", str(o))))
        rows = [{k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in rec.items()}
                for rec in self.records()]
        return {"spec": spec, "rows": rows}


def make_design(name: str) -> LogisticDesign:
    if name == "one-binary":
        return LogisticDesign.one_binary_predictor()
    if name == "two-binary":
        return LogisticDesign.two_binary_predictors()
    if name.startswith("saturated-"):
        return LogisticDesign.saturated(int(name.split("-", 1)[1]))
    raise ValueError(f"unknown design {name!r}")


def replication_rng(seed: int, grid_index: int, b: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(grid_index, b)))


def _timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, (time.perf_counter() - t0) * 1e3


# Each replication returns {method: ({metric: value}, ms)}; failures give NaN metrics.

def _rep_one_sample_ci(spec, n, theta, gamma, rng):
    x = int(rng.binomial(n, theta))
    params = PrivacyParams.for_proportion(n, spec.epsilon, spec.family)
    release = privatize_proportions([x / n], n, params, rng)
    config = FimaConfig(H=spec.H)
    out = {}

    def fima():
        draws = fima_sample(release, config, rng)[0]
        return percentile_ci(draws, spec.level, spec.sided)

    methods = {FIMA: fima,
               NP_Z: lambda: baselines.np_z_ci(x, n, spec.level, spec.sided),
               EXACT: lambda: baselines.exact_binomial_ci(x, n, spec.level)}
    for name in spec.methods:
        try:
            ci, ms = _timed(methods[name])
            out[name] = ({"coverage": float(theta in ci), "length": ci.length}, ms)
        except ValueError:
            out[name] = ({"coverage": math.nan, "length": math.nan}, math.nan)
    return out


def _rep_one_sample_test(spec, n, theta, gamma, rng):
    x = int(rng.binomial(n, theta))
    params = PrivacyParams.for_proportion(n, spec.epsilon, spec.family)
    release = privatize_proportions([x / n], n, params, rng)
    config = FimaConfig(H=spec.H)

    def fima():
        draws = fima_sample(release, config, rng)[0]
        return one_sample_test(draws, gamma, spec.direction, spec.alpha)

    methods = {FIMA: fima,
               NP_Z: lambda: baselines.np_z_test_one(x, n, gamma, spec.direction, spec.alpha),
               EXACT: lambda: baselines.exact_binomial_test(x, n, gamma, spec.direction, spec.alpha)}
    return _run_tests(spec, methods)


def _rep_two_sample_test(spec, n, theta1, theta2, rng):
    x1, x2 = int(rng.binomial(n, theta1)), int(rng.binomial(n, theta2))
    params = PrivacyParams.for_proportion(n, spec.epsilon, spec.family)
    r1 = privatize_proportions([x1 / n], n, params, rng)
    r2 = privatize_proportions([x2 / n], n, params, rng)
    config = FimaConfig(H=spec.H)

    def fima():
        d1 = fima_sample(r1, config, rng)[0]
        d2 = fima_sample(r2, config, rng)[0]
        return two_sample_test(d1, d2, spec.direction, spec.alpha)

    methods = {FIMA: fima,
               NP_Z: lambda: baselines.np_two_sample_z(x1, n, x2, n, spec.direction, spec.alpha)}
    return _run_tests(spec, methods)


def _rep_chisq(spec, n, shift, gamma, rng):
    theta0 = 0.25 + shift * CHISQ_DIRECTION
    raw = rng.multinomial(n, theta0).reshape(2, 2)
    params = PrivacyParams.for_count(spec.epsilon, spec.family, TABLE_SENSITIVITY)
    noisy = privatize_counts(raw, params, rng, n=n).values.reshape(2, 2)
    table_dp = ContingencyTable(noisy, n)
    config = FimaConfig(H=spec.H)
    methods = {FIMA: lambda: fima_chisq_test(table_dp, spec.epsilon, config, rng, spec.alpha,
                                             spec.family).test,
               NP_CHISQ: lambda: baselines.np_chisq_test(raw, spec.alpha)}
    return _run_tests(spec, methods)


def _run_tests(spec, methods):
    out = {}
    for name in spec.methods:
        try:
            res, ms = _timed(methods[name])
            out[name] = ({"rejection_rate": float(res.reject)}, ms)
        except ValueError:
            out[name] = ({"rejection_rate": math.nan}, math.nan)
    return out


def _rep_logistic(spec, n, theta, gamma, rng):
    design = make_design(spec.design)
    n_cell = n // design.n_cells
    thetas = np.asarray(spec.cell_thetas)
    truth = design.true_coefficients(thetas)
    x = rng.binomial(n_cell, thetas)
    params = PrivacyParams.for_count(spec.epsilon, spec.family)
    x_dp = privatize_counts(x, params, rng, n=n_cell).values
    config = FimaConfig(H=spec.H)
    res, ms = _timed(logistic_inference, x_dp, n_cell, spec.epsilon, design, config, rng,
                     spec.level, spec.family)
    metrics = {}
    for name, ci in res.intervals.items():
        metrics[f"coverage[{name}]"] = float(truth[name] in ci)
        metrics[f"length[{name}]"] = ci.length
    return {FIMA: (metrics, ms)}


def _rep_running_time(spec, n, theta, gamma, rng):
    # times the one-sample test pipeline at theta = 0.5
    inner = replace(spec, task=Task.ONE_SAMPLE_TEST)
    out = _rep_one_sample_test(inner, n, 0.5, 0.5, rng)
    return {name: ({}, ms) for name, (_, ms) in out.items()}


REPLICATORS = {
    Task.ONE_SAMPLE_CI: _rep_one_sample_ci,
    Task.ONE_SAMPLE_TEST: _rep_one_sample_test,
    Task.TWO_SAMPLE_TEST: _rep_two_sample_test,
    Task.CHISQ_TEST: _rep_chisq,
    Task.LOGISTIC_CI: _rep_logistic,
    Task.RUNNING_TIME: _rep_running_time,
}


def _run_block(spec: ExperimentSpec, grid_index: int, point, b_values) -> list[dict]:
    n, theta, gamma = point
    rep = REPLICATORS[spec.task]
    if spec.task is Task.RUNNING_TIME:
        # untimed warm-up so the first grid point does not absorb import and cache costs
        rep(spec, n, theta, gamma, np.random.default_rng(0))
    return [rep(spec, n, theta, gamma, replication_rng(spec.seed, grid_index, b)) for b in b_values]


def _summarize(spec, point, reps) -> list[ExperimentRow]:
    n, theta, gamma = point
    rows = []
    for method in spec.methods:
        ms_values = np.array([r[method][1] for r in reps], dtype=float)
        ms = float(np.nanmean(ms_values)) if np.any(~np.isnan(ms_values)) else math.nan
        metric_names = list(reps[0][method][0]) if reps else []
        if spec.task is Task.RUNNING_TIME:
            ok = ms_values[~np.isnan(ms_values)]
            se = float(ok.std(ddof=1) / math.sqrt(ok.size)) if ok.size > 1 else math.nan
            rows.append(ExperimentRow(method, spec.task.value, n, spec.epsilon, theta, gamma,
                                      "ms", ms, se, ms))
            continue
        for metric in metric_names:
            vals = np.array([r[method][0][metric] for r in reps], dtype=float)
            ok = vals[~np.isnan(vals)]
            if ok.size == 0:
                value = se = math.nan
            elif metric.split("[")[0] in BINARY_METRICS:
                value = float(ok.mean())
                se = math.sqrt(value * (1 - value) / ok.size)
            else:
                value = float(ok.mean())
                se = float(ok.std(ddof=1) / math.sqrt(ok.size)) if ok.size > 1 else math.nan
            rows.append(ExperimentRow(method, spec.task.value, n, spec.epsilon, theta, gamma,
                                      metric, value, se, ms))
    return rows


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run every grid point for ``spec.B`` replications and summarize per method."""
    grid = spec.grid()
    blocks = []
    n_chunks = max(1, spec.workers)
    for g, point in enumerate(grid):
        for chunk in np.array_split(np.arange(spec.B), n_chunks):
            if chunk.size:
                blocks.append((g, point, chunk.tolist()))

    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            futures = [pool.submit(_run_block, spec, g, p, bs) for g, p, bs in blocks]
            outputs = [f.result() for f in futures]
    else:
        outputs = [_run_block(spec, g, p, bs) for g, p, bs in blocks]

    per_point: dict[int, list] = {g: [] for g in range(len(grid))}
    for (g, _, _), reps in zip(blocks, outputs):
        per_point[g].extend(reps)

    result = ExperimentResult(spec)
    for g, point in enumerate(grid):
        result.rows.extend(_summarize(spec, point, per_point[g]))
    return result


FIG1_THETAS = (0.1, 0.11) + tuple(round(0.12 + 0.005 * i, 3) for i in range(174))

PRESETS: dict[tuple[str, str], dict] = {
    ("one-sample-ci", "desk"): dict(n_values=(30,), thetas=(0.2, 0.5, 0.8), B=2000, H=1000,
                                    baselines=(EXACT,)),
    ("one-sample-ci", "full"): dict(n_values=(30,), thetas=FIG1_THETAS, B=10_000, H=1000),
    ("one-sample-test", "desk"): dict(n_values=(30,), thetas=(0.3, 0.5, 0.7), B=2000, H=1000),
    ("one-sample-test", "full"): dict(n_values=(30,), thetas=tuple(i / 10 for i in range(1, 10)),
                                       B=10_000, H=1000),
    ("one-sample-power", "desk"): dict(n_values=(30,), thetas=(0.2,),
                                       gammas=(0.2, 0.3, 0.4, 0.5, 0.6), B=2000, H=1000),
    ("two-sample-test", "desk"): dict(n_values=(30,), thetas=(0.2,), gammas=(0.4, 0.6, 0.8),
                                      B=2000, H=1000),
    ("two-sample-level", "desk"): dict(n_values=(30,), thetas=(0.3, 0.5, 0.7), B=2000, H=1000),
    ("chisq-test", "desk"): dict(n_values=(1000,), thetas=(0.0,), epsilon=0.1, B=500, H=2000),
    ("chisq-test", "full"): dict(n_values=(10, 100, 1000, 10_000, 20 ** 4), thetas=(0.0, 0.01),
                                  epsilon=0.1, B=10_000, H=10_000),
    ("logistic-ci", "desk"): dict(n_values=(500,), B=2000, H=2000, design="one-binary",
                                  cell_thetas=(0.3, 0.5)),
    ("logistic-ci", "full"): dict(n_values=(15, 30, 100, 200, 500, 1000, 2000), B=10_000,
                                   H=10_000, design="one-binary", cell_thetas=(0.3, 0.5)),
    ("running-time", "desk"): dict(n_values=tuple(8 * 2 ** k for k in range(7)), B=1000, H=1000),
    ("running-time", "full"): dict(n_values=tuple(8 * 2 ** k for k in range(7)) + (700, 900, 1200),
                                    B=1000, H=1000),
}

PRESET_TASKS = {
    "one-sample-power": Task.ONE_SAMPLE_TEST,
    "two-sample-level": Task.TWO_SAMPLE_TEST,
}


def preset_spec(task: str, preset: str = "desk", **overrides) -> ExperimentSpec:
    try:
        kwargs = dict(PRESETS[(task, preset)])
    except KeyError:
        known = sorted({t for t, _ in PRESETS})
        raise ValueError(f"no {preset!r} preset for task {task!r}; tasks: {known}") from None
    kwargs.update(overrides)
    return ExperimentSpec(task=PRESET_TASKS.get(task, task), **kwargs)
