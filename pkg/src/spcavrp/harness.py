"""Monte Carlo experiment runner.

An experiment spec (JSON) names a model, a grid of sample sizes, a number
of repetitions and a list of estimators.  Every ``(n, rep)`` cell draws
one data set, shared by all estimators, from the seed
``derive_seed(seed, n, rep)``; estimator ``i`` then uses
``derive_seed(data_seed, i + 1)``.  Cells run on a thread pool and are
collected in order, so output does not depend on the thread count.
"""
import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import ceil

import numpy as np

from .baselines import diagonal_threshold, vanilla_pca
from .covariance import AUTO, CovarianceSource
from .deflation import DeflationConfig, deflate_fit
from .errors import InvalidInput
from .estimator import SpcavrpConfig, fit_source, resolve_strategy
from .evaluation import subspace_loss, support_metrics, var_curve
from .models import model_from_spec, sample_gaussian
from .projections import derive_seed

RESULT_COLUMNS = (
    "model_id", "estimator_id", "n", "rep", "loss",
    "support_recovery", "wall_time_seconds", "seed",
)
VAR_COLUMNS = ("model_id", "estimator_id", "n", "rep", "l", "var")
ALGORITHMS = ("rp", "deflate", "vanilla", "diagonal")


@dataclass
class ResultRow:
    model_id: str
    estimator_id: str
    n: int
    rep: object  # int, or "mean" for aggregate rows
    loss: float
    support_recovery: float
    wall_time_seconds: float
    seed: int


@dataclass
class VarRow:
    model_id: str
    estimator_id: str
    n: int
    rep: int
    l: int
    var: float


@dataclass
class EstimatorSpec:
    id: str
    algorithm: str = "rp"
    A: int = 300
    B: int = None
    d: int = None
    l: int = None
    m: int = 1
    l_per_component: list = None
    k: int = None
    strategy: str = AUTO
    exhaustive: bool = False
    center: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise InvalidInput(f"unknown algorithm {self.algorithm!r}")
        if self.B is None:
            self.B = ceil(self.A / 3)
        if self.algorithm == "deflate":
            if not self.l_per_component:
                if self.l is None:
                    raise InvalidInput(f"estimator {self.id!r} needs l_per_component or l")
                self.l_per_component = [self.l] * self.m
            self.m = len(self.l_per_component)
            if self.d is None:
                self.d = max(self.l_per_component)
        elif self.algorithm == "rp":
            if self.l is None and self.d is None:
                raise InvalidInput(f"estimator {self.id!r} needs l or d")
            self.l = self.d if self.l is None else self.l
            self.d = self.l if self.d is None else self.d
        elif self.algorithm == "diagonal" and self.k is None:
            raise InvalidInput(f"estimator {self.id!r} needs k")


@dataclass
class ExperimentSpec:
    model_id: str
    model: dict
    n_grid: list
    reps: int
    estimators: list
    seed: int = 0
    mode: str = "loss"
    l_grid: list = None
    metrics: list = None

    @classmethod
    def from_dict(cls, doc):
        try:
            est = [e if isinstance(e, EstimatorSpec) else EstimatorSpec(**e) for e in doc["estimators"]]
            spec = cls(
                model_id=str(doc.get("model_id", doc["model"].get("kind", "model"))),
                model=dict(doc["model"]),
                n_grid=[int(n) for n in doc["n_grid"]],
                reps=int(doc["reps"]),
                estimators=est,
                seed=int(doc.get("seed", 0)),
                mode=doc.get("mode", "loss"),
                l_grid=doc.get("l_grid"),
                metrics=doc.get("metrics"),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"invalid experiment spec: {exc}") from None
        spec.validate()
        return spec

    def validate(self):
        if self.reps < 1:
            raise InvalidInput("reps must be at least 1")
        if not self.n_grid or any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise InvalidInput("n_grid must be nonempty and strictly increasing")
        if self.n_grid[0] < 1:
            raise InvalidInput("sample sizes must be positive")
        if not self.estimators:
            raise InvalidInput("at least one estimator is required")
        ids = [e.id for e in self.estimators]
        if len(set(ids)) != len(ids):
            raise InvalidInput("estimator ids must be unique")
        if self.mode not in ("loss", "var-curve"):
            raise InvalidInput(f"unknown mode {self.mode!r}")
        if self.mode == "var-curve":
            if not self.l_grid:
                raise InvalidInput("var-curve mode needs l_grid")
            if any(e.algorithm != "rp" for e in self.estimators):
                raise InvalidInput("var-curve mode supports only rp estimators")


def run_estimator(est, X, seed):
    """Fit one estimator; returns ``(frame, support, source, fit_result)``."""
    n, p = X.shape
    if est.algorithm == "rp":
        cfg = SpcavrpConfig(
            d=est.d, l=est.l, A=est.A, B=est.B, m=est.m, seed=seed,
            strategy=est.strategy, exhaustive=est.exhaustive, center=est.center,
        )
        cfg.validate(p)
        src = CovarianceSource.from_data(X, resolve_strategy(cfg, n, p), center=est.center)
        result = fit_source(src, cfg)
        return result.vectors, result.support, src, result
    if est.algorithm == "deflate":
        cfg = DeflationConfig(
            tuple(est.l_per_component), d=est.d, A=est.A, B=est.B, seed=seed,
            strategy=est.strategy, exhaustive=est.exhaustive, center=est.center,
        )
        result = deflate_fit(X, cfg)
        support = np.flatnonzero(np.any(result.components != 0, axis=1))
        return result.components, support, None, result
    src = CovarianceSource.from_data(X, center=est.center)
    if est.algorithm == "vanilla":
        frame = vanilla_pca(src, est.m)
        return frame, np.arange(p), src, None
    support, frame = diagonal_threshold(src, est.k, est.m)
    return frame, support, src, None


def _truth(model, m):
    V = model.vectors[:, :m]
    return V, np.flatnonzero(np.any(V != 0, axis=1))


def _run_cell(spec, model, n, rep, record_time):
    data_seed = derive_seed(spec.seed, n, rep)
    X = sample_gaussian(model, n, data_seed)
    rows = []
    for i, est in enumerate(spec.estimators):
        seed = derive_seed(data_seed, i + 1)
        t0 = time.perf_counter()
        frame, support, src, result = run_estimator(est, X, seed)
        elapsed = time.perf_counter() - t0 if record_time else float("nan")
        if spec.mode == "var-curve":
            curve = var_curve(result.scores, src, spec.l_grid)
            rows.extend(
                VarRow(spec.model_id, est.id, n, rep, int(l), float(v))
                for l, v in zip(curve.l_grid, curve.values)
            )
            continue
        m = frame.shape[1]
        if m > model.m:
            raise InvalidInput(f"estimator {est.id!r} asks for {m} components, model has {model.m}")
        V, true_support = _truth(model, m)
        recovery, _ = support_metrics(support, true_support)
        rows.append(
            ResultRow(spec.model_id, est.id, n, rep, subspace_loss(frame, V), recovery, elapsed, data_seed)
        )
    return rows


def run_experiment(spec, threads=1, record_time=False):
    """All per-repetition rows, in ``(n, rep, estimator)`` order."""
    if not isinstance(spec, ExperimentSpec):
        spec = ExperimentSpec.from_dict(spec)
    model = model_from_spec(spec.model)
    cells = [(n, rep) for n in spec.n_grid for rep in range(spec.reps)]

    def work(cell):
        return _run_cell(spec, model, cell[0], cell[1], record_time)

    if threads > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(work, cells))
    else:
        chunks = [work(c) for c in cells]
    return [row for chunk in chunks for row in chunk]


def aggregate(rows, spec):
    """Mean loss, recovery and time per ``(estimator, n)``."""
    out = []
    for est in spec.estimators:
        for n in spec.n_grid:
            cell = [r for r in rows if r.estimator_id == est.id and r.n == n]
            out.append(
                ResultRow(
                    spec.model_id, est.id, n, "mean",
                    float(np.mean([r.loss for r in cell])),
                    float(np.mean([r.support_recovery for r in cell])),
                    float(np.mean([r.wall_time_seconds for r in cell])),
                    spec.seed,
                )
            )
    return out


def mean_losses(rows):
    """``{(estimator_id, n): mean loss}`` over per-repetition rows."""
    groups = {}
    for r in rows:
        groups.setdefault((r.estimator_id, r.n), []).append(r.loss)
    return {key: float(np.mean(v)) for key, v in groups.items()}


def fmt(x):
    if isinstance(x, float):
        return "%.17g" % x
    return str(x)


def write_rows(rows, columns, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([fmt(getattr(r, c)) for c in columns])
