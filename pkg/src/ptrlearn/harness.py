"""Config-driven benchmark runs: cold start, active learning and graph comparison."""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__, synthetic
from .active import ALConfig, pal_ptr, pool_based_al, zero_shot
from .coldstart import METHODS as BASELINES, coldstart_init
from .data import Dataset, Oracle, balanced_accuracy, load_dataset, rank_sum_test, stratified_split
from .forest import fit
from .graph import estimate_density, pairwise_distances
from .ptr import PTRConfig, PTRModel, graph_purity_search, optimize_ptr, threshold_curve

log = logging.getLogger(__name__)

COLDSTART_METHODS = ("ptr",) + BASELINES
REFERENCE = "rs"
ALPHA = 0.05


class BudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class DatasetSpec:
    """A CSV file, or a named synthetic fixture (generated per split seed unless ``seed`` is set)."""

    name: str
    path: str | None = None
    label_column: str = "class"
    synthetic: str | None = None
    seed: int | None = None

    def __post_init__(self):
        if (self.path is None) == (self.synthetic is None):
            raise ValueError(f"dataset {self.name!r}: give exactly one of path or synthetic")
        if self.synthetic is not None and self.synthetic not in synthetic.FIXTURES:
            raise ValueError(f"dataset {self.name!r}: unknown fixture {self.synthetic!r}")

    def load(self, split_seed: int = 0) -> Dataset:
        if self.path is not None:
            return load_dataset(self.path, self.label_column, name=self.name)
        seed = split_seed if self.seed is None else self.seed
        d = synthetic.FIXTURES[self.synthetic](seed)
        return Dataset(self.name, d.features, d.labels, d.n_classes)


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple[DatasetSpec, ...]
    budgets: tuple[int, ...] = (10,)
    coldstart_methods: tuple[str, ...] = ("ptr", "rs")
    strategies: tuple[str, ...] = ("uncertainty",)
    n_splits: int = 20
    base_seed: int = 0
    train_frac: float = 0.7
    trials: int = 500
    lambda_step: float = 0.01
    max_lambda_steps: int = 100
    ptr_method: str = "tpe"
    ell: int | None = None
    rounds: int = 10
    n_trees: int = 100
    output_dir: str = "results"

    def __post_init__(self):
        if not self.datasets:
            raise ValueError("no datasets configured")
        bad = [m for m in self.coldstart_methods if m not in COLDSTART_METHODS]
        if bad:
            raise ValueError(f"unknown cold-start method(s) {bad}")
        if any(b < 1 for b in self.budgets) or not self.budgets:
            raise ValueError("budgets must be >= 1")
        for s in self.strategies:
            ALConfig(budget=1, strategy=s)  # validates the name
        if self.n_splits < 1:
            raise ValueError("n_splits must be >= 1")

    @property
    def split_seeds(self) -> list[int]:
        return [self.base_seed + i for i in range(self.n_splits)]

    def ptr_config(self, seed: int) -> PTRConfig:
        return PTRConfig(
            lambda_step=self.lambda_step,
            trials=self.trials,
            seed=seed,
            method=self.ptr_method,
            max_lambda_steps=self.max_lambda_steps,
        )

    def to_dict(self) -> dict:
        out = asdict(self)
        out["datasets"] = [asdict(d) for d in self.datasets]
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw.get("config", raw))  # a manifest carries its config
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        raw["datasets"] = tuple(DatasetSpec(**d) for d in raw.get("datasets", ()))
        for key in ("budgets", "coldstart_methods", "strategies"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return cls(**raw)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class ResultRecord:
    dataset: str
    method: str
    budget: int
    strategy: str
    split_seed: int
    round: int
    balanced_accuracy: float
    oracle_queries: int
    expected_queries: int
    n_oracle: int
    n_propagated: int
    n_synthetic: int
    wall_time: float = field(default=0.0, compare=False)

    @property
    def key(self) -> tuple:
        return (self.dataset, self.method, self.budget, self.strategy, self.split_seed, self.round)


_RECORD_COLUMNS = [f.name for f in fields(ResultRecord) if f.name != "wall_time"]


def _prepare(cfg: ExperimentConfig, spec: DatasetSpec, seed: int):
    d = spec.load(seed)
    split = stratified_split(d, seed, cfg.train_frac)
    return d.subset(split.train_indices), d.subset(split.test_indices)


def _fit_ptr(cfg: ExperimentConfig, pool: Dataset, seed: int) -> PTRModel:
    D = pairwise_distances(pool.features)
    return optimize_ptr(D, estimate_density(D, cfg.ell), cfg.ptr_config(seed))


def _score(model, test: Dataset) -> float:
    return balanced_accuracy(test.labels, model.predict(test.features))


def _coldstart_job(cfg: ExperimentConfig, spec: DatasetSpec, seed: int) -> list[ResultRecord]:
    pool, test = _prepare(cfg, spec, seed)
    ptr = _fit_ptr(cfg, pool, seed) if "ptr" in cfg.coldstart_methods else None
    out = []
    for B in cfg.budgets:
        for method in cfg.coldstart_methods:
            start = time.perf_counter()
            oracle = Oracle(pool.labels)
            if method == "ptr":
                labeled = zero_shot(ptr.regions, ptr.density, oracle, B)
                expected = min(B, ptr.regions.k)
            else:
                labeled = coldstart_init(method, pool.features, B, oracle, seed)
                expected = B
            Xt, yt = labeled.training_set(pool.features)
            model = fit(Xt, yt, seed=seed, n_trees=cfg.n_trees)
            out.append(
                ResultRecord(
                    spec.name, method, B, "none", seed, 0, _score(model, test), oracle.query_count, expected,
                    labeled.count("oracle"), labeled.count("propagated"), len(labeled.synthetic),
                    time.perf_counter() - start,
                )
            )
    return out


def _al_job(cfg: ExperimentConfig, spec: DatasetSpec, seed: int) -> list[ResultRecord]:
    pool, test = _prepare(cfg, spec, seed)
    ptr = _fit_ptr(cfg, pool, seed)
    out = []
    for B in cfg.budgets:
        for strategy in cfg.strategies:
            al = ALConfig(budget=B, rounds=cfg.rounds, strategy=strategy, seed=seed, n_trees=cfg.n_trees)
            for method in ("ptr", REFERENCE):
                start = time.perf_counter()
                oracle = Oracle(pool.labels)
                if method == "ptr":
                    run = pal_ptr(pool.features, ptr.regions, ptr.density, oracle, al)
                    cap = ptr.regions.k
                else:
                    init = coldstart_init(REFERENCE, pool.features, B, oracle, seed)
                    run = pool_based_al(pool.features, init, oracle, al)
                    cap = pool.n
                elapsed = (time.perf_counter() - start) / len(run.rounds)
                for s in run.rounds:
                    out.append(
                        ResultRecord(
                            spec.name, method, B, strategy, seed, s.round, _score(s.model, test), s.queries,
                            min((s.round + 1) * B, cap), s.n_oracle, s.n_propagated, s.n_synthetic, elapsed,
                        )
                    )
    return out


def _run(job, cfg: ExperimentConfig, jobs: int) -> list[ResultRecord]:
    tasks = [(cfg, spec, seed) for spec in cfg.datasets for seed in cfg.split_seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(job, *zip(*tasks)))
    else:
        parts = [job(*t) for t in tasks]
    records = [r for part in parts for r in part]
    audit_budget(records)
    return sorted(records, key=lambda r: r.key)


def run_coldstart(cfg: ExperimentConfig, jobs: int = 1) -> list[ResultRecord]:
    return _run(_coldstart_job, cfg, jobs)


def run_al(cfg: ExperimentConfig, jobs: int = 1) -> list[ResultRecord]:
    return _run(_al_job, cfg, jobs)


def audit_budget(records) -> None:
    """Every record's oracle counter must equal its scheduled query count."""
    for r in records:
        if r.oracle_queries != r.expected_queries or r.oracle_queries > (r.round + 1) * r.budget:
            raise BudgetError(f"{r.key}: {r.oracle_queries} queries, schedule {r.expected_queries}")


def summarize(records) -> list[dict]:
    """Mean/std per (dataset, method, budget, strategy, round), rank-sum vs RS."""
    groups: dict[tuple, list[float]] = {}
    for r in records:
        groups.setdefault((r.dataset, r.method, r.budget, r.strategy, r.round), []).append(r.balanced_accuracy)
    rows = []
    for key in sorted(groups):
        acc = np.array(groups[key])
        ref = groups.get(key[:1] + (REFERENCE,) + key[2:])
        p, flag = float("nan"), ""
        if key[1] != REFERENCE and ref is not None and min(len(acc), len(ref)) >= 5:
            p = rank_sum_test(acc, ref)
            if p < ALPHA:
                flag = "↑" if acc.mean() > np.mean(ref) else "↓"
        rows.append(
            dict(
                zip(("dataset", "method", "budget", "strategy", "round"), key),
                n_splits=len(acc),
                mean=float(acc.mean()),
                std=float(acc.std(ddof=1)) if len(acc) > 1 else 0.0,
                p_vs_rs=p,
                flag=flag,
            )
        )
    return rows


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def emit_results(records, out_dir, cfg: ExperimentConfig, command: str) -> dict:
    """Write records.csv, summary.csv, timings.csv and manifest.json into ``out_dir``."""
    records = sorted(records, key=lambda r: r.key)
    if not records:
        raise ValueError("no records to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / name for name in ("records.csv", "summary.csv", "timings.csv", "manifest.json")}
    _write_csv(paths["records.csv"], _RECORD_COLUMNS, ([getattr(r, c) for c in _RECORD_COLUMNS] for r in records))
    summary = summarize(records)
    _write_csv(paths["summary.csv"], list(summary[0]), (list(row.values()) for row in summary))
    _write_csv(paths["timings.csv"], ["dataset", "method", "budget", "strategy", "split_seed", "round", "wall_time"],
               (list(r.key) + [r.wall_time] for r in records))
    manifest = {"command": command, "version": __version__, "config": cfg.to_dict(), "split_seeds": cfg.split_seeds}
    paths["manifest.json"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return paths


def read_records(path) -> list[ResultRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    kinds = {f.name: f.type for f in fields(ResultRecord)}
    cast = {"int": int, "float": float, "str": str}
    return [ResultRecord(**{k: cast[kinds[k]](v) for k, v in row.items()}) for row in rows]


def ptr_fit(cfg: ExperimentConfig, out_dir) -> list[Path]:
    """Fit PTR on each dataset's training split for the first seed; dump JSON."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg.base_seed
    paths = []
    for spec in cfg.datasets:
        pool, _ = _prepare(cfg, spec, seed)
        model = _fit_ptr(cfg, pool, seed)
        path = out / f"ptr_{spec.name}_{seed}.json"
        model.to_json(path)
        paths.append(path)
    return paths


def _graph_job(cfg: ExperimentConfig, spec: DatasetSpec, seed: int):
    d = spec.load(seed)
    D = pairwise_distances(d.features)
    dens = estimate_density(D, cfg.ell)
    rows, curves = [], []
    for kind in ("rips", "sigma"):
        ps, params, _ = graph_purity_search(D, dens, d.labels, kind, cfg.trials, seed, cfg.ptr_method, cfg.ptr_config(seed))
        rows.append([spec.name, seed, kind, ps, json.dumps(params, sort_keys=True)])
        grid, thr = threshold_curve(params)
        curves.extend([spec.name, seed, kind, float(g), float(v)] for g, v in zip(grid, thr))
    return rows, curves


def graph_compare(cfg: ExperimentConfig, out_dir, jobs: int = 1) -> dict:
    """Best PuritySize of Rips vs sigma-Rips per dataset and seed, plus threshold curves."""
    tasks = [(cfg, spec, seed) for spec in cfg.datasets for seed in cfg.split_seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(_graph_job, *zip(*tasks)))
    else:
        parts = [_graph_job(*t) for t in tasks]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"graph_compare.csv": out / "graph_compare.csv", "curves.csv": out / "curves.csv"}
    _write_csv(paths["graph_compare.csv"], ["dataset", "seed", "kind", "purity_size", "params"],
               (row for rows, _ in parts for row in rows))
    _write_csv(paths["curves.csv"], ["dataset", "seed", "kind", "density", "threshold"],
               (row for _, curves in parts for row in curves))
    manifest = {"command": "graph-compare", "version": __version__, "config": cfg.to_dict(), "split_seeds": cfg.split_seeds}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return paths
