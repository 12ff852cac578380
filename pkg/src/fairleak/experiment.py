"""Attack-versus-defence sweeps and result files.

Each trial draws (or reuses) a dataset, builds an attack plan, answers the
queries exactly, privatizes them, runs the attack and records the answer
error and the leakage.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import privacy, reconstruction as rec, solvers
from .data import gen_synthetic
from .errors import FairleakError
from .fairness import Dataset, Mechanism, Metric, QueryBatch, metric_batch

ATTACKS = ("full_rank", "compressed_sensing", "abs_partition")
SOLVERS = ("bp", "omp")
SENSING = ("uniform_noise", "random_binary")
CSV_HEADER = ["trial", "n", "n0", "m", "epsilon", "mechanism",
              "avg_sp_err", "leakage_pct", "runtime_ms"]

# median of |Z| for a unit-scale draw
_MEDIAN_ABS = {"laplace": math.log(2.0), "cauchy": 1.0}

# seed streams
_PLAN, _NOISE, _GUESS = 1, 2, 3


def auto_query_count(n: int, n0: int, c: float) -> int:
    """``ceil(c * N0 * ln(n / N0))``, never below ``N0 + 1``."""
    if not 1 <= n0 < n:
        raise ValueError(f"need 1 <= n0 < n, got n0={n0}, n={n}")
    if not c > 0:
        raise ValueError(f"c must be > 0, got {c}")
    return max(math.ceil(c * n0 * math.log(n / n0)), n0 + 1)


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 63-bit seed for a named stream of a trial."""
    ss = np.random.SeedSequence([int(seed), *map(int, keys)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _parse_eps(value) -> float:
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "+inf"):
            return math.inf
        value = float(value)
    eps = float(value)
    if not eps > 0:
        raise ValueError(f"epsilon must be > 0 or inf, got {value!r}")
    return eps


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep over ``epsilons`` x ``trials``.

    ``m = None`` means :func:`auto_query_count` for compressed sensing and
    ``n`` for full rank. Extra knobs beyond the core grid: ``sensing`` picks
    the compressed-sensing rows, ``probe_sizes`` spends one query on learning
    the group sizes instead of taking them as known, ``record_runtime = False``
    writes ``runtime_ms = 0`` so result files are byte-reproducible, and
    ``workers > 1`` runs trials in separate processes.
    """

    n: int = 100
    n0: int = 10
    m: int | None = None
    c: float = 1.74
    epsilons: tuple[float, ...] = (math.inf,)
    mechanism: Mechanism = Mechanism.NONE
    metric: Metric = Metric.SP
    attack: str = "compressed_sensing"
    solver: str = "bp"
    trials: int = 10
    seed: int = 42
    delta: float | None = None
    sensing: str = "uniform_noise"
    probe_sizes: bool = False
    record_runtime: bool = True
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "mechanism", Mechanism.parse(self.mechanism))
        object.__setattr__(self, "metric", Metric.parse(self.metric))
        eps = self.epsilons
        if isinstance(eps, (int, float, str)):
            eps = [eps]
        object.__setattr__(self, "epsilons", tuple(_parse_eps(e) for e in eps))
        if self.m == "auto":
            object.__setattr__(self, "m", None)
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not 1 <= self.n0 < self.n:
            raise ValueError(f"need 1 <= n0 < n, got n0={self.n0}, n={self.n}")
        if self.attack not in ATTACKS:
            raise ValueError(f"attack must be one of {ATTACKS}, got {self.attack!r}")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.sensing not in SENSING:
            raise ValueError(f"sensing must be one of {SENSING}, got {self.sensing!r}")
        if not self.epsilons:
            raise ValueError("epsilons must not be empty")
        if self.attack == "full_rank" and self.m is not None and self.m != self.n:
            raise ValueError(f"full_rank needs m = n = {self.n}, got m={self.m}")
        if self.m is not None and self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.attack == "abs_partition":
            if not self.metric.is_absolute:
                object.__setattr__(self, "metric", Metric.ABS_SP)
        elif self.metric.is_absolute:
            raise ValueError(f"{self.attack} needs a signed metric (SP or EO)")
        if self.mechanism is Mechanism.LAPLACE_SMOOTH and self.delta is None:
            raise ValueError("laplace_smooth needs delta")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - names)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**raw)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with Path(path).open(encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def queries(self, n: int, n0: int) -> int:
        if self.attack == "full_rank":
            return n
        if self.attack == "abs_partition":
            return n
        return self.m if self.m is not None else auto_query_count(n, n0, self.c)


@dataclass(frozen=True)
class ExperimentRow:
    trial: int
    n: int
    n0: int
    m: int
    epsilon: float
    mechanism: str
    avg_sp_err: float
    leakage_pct: float
    runtime_ms: float
    failed: bool = field(default=False, compare=False)

    def as_record(self) -> dict[str, Any]:
        return {k: getattr(self, k) for k in CSV_HEADER}


# ── one trial ──


def _privatize(cfg: ExperimentConfig, clean: QueryBatch, eps: float, seed: int,
               n: int, n0: int, n1: int) -> QueryBatch:
    mech = cfg.mechanism
    if mech is Mechanism.NONE or math.isinf(eps):
        return clean
    if mech is Mechanism.LAPLACE_GLOBAL:
        return privacy.laplace_global_mechanism(clean, n, eps, seed)
    if clean.metric.is_absolute:
        return privacy.conceal_abs_sp(clean, n, n0, eps, seed)
    if mech is Mechanism.CAUCHY_SMOOTH:
        return privacy.conceal_sp_cauchy(clean, n, n0, n1, eps, seed)
    return privacy.conceal_sp_laplace_smooth(clean, n, n0, n1, eps, cfg.delta, seed)


def _noise_tol(batch: QueryBatch) -> float:
    """``10 x`` the median absolute noise the mechanism adds to one answer."""
    scale = float(batch.meta.get("scale", 0.0)) if batch.privatized else 0.0
    if scale <= 0.0:
        return solvers.EQ_TOL
    return max(solvers.EQ_TOL, 10.0 * scale * _MEDIAN_ABS[batch.meta["family"]])


def _embed(rows: np.ndarray, cols: np.ndarray, n: int) -> np.ndarray:
    full = np.zeros((rows.shape[0], n))
    full[:, cols] = rows
    return full


def _attack_linear(cfg, ds, base, eps, seed_t):
    """Full-rank or compressed-sensing attack; returns (a_hat, answered, clean)."""
    eo = cfg.metric.conditions_on_positive
    cols = ds.positives if eo else np.arange(ds.n)
    sub_a = ds.a[cols]
    n, n1 = cols.size, int(sub_a.sum())
    n0 = n - n1
    base = base[cols]

    if cfg.attack == "full_rank":
        plan = rec.plan_full_rank((base >= 0.5).astype(float), n)
    else:
        m = cfg.queries(n, n0)
        if cfg.sensing == "random_binary":
            plan = rec.plan_random_binary(n, m, derive_seed(seed_t, _PLAN))
        else:
            plan = rec.plan_compressed_sensing(base, n, m, derive_seed(seed_t, _PLAN))
    if cfg.probe_sizes:
        plan = rec.with_probe(plan)

    clean = metric_batch(ds, _embed(plan.matrix.h, cols, ds.n), cfg.metric)
    answered = _privatize(cfg, clean, eps, derive_seed(seed_t, _NOISE), n, n0, n1)
    sizes = (None, None) if cfg.probe_sizes else (n1, n0)

    if cfg.attack == "full_rank":
        rep = rec.reveal_full_rank(plan, answered, *sizes)
    else:
        rep = rec.reveal_compressed_sensing(plan, answered, *sizes, solver=cfg.solver,
                                            eq_tol=_noise_tol(answered))
    a_hat = np.full(ds.n, rec.UNKNOWN, dtype=np.int8)
    a_hat[cols] = rep.a_hat
    return a_hat, answered.values, clean.values


def _attack_partition(cfg, ds, eps, seed_t):
    clean_vals: list[float] = []
    answers: list[float] = []

    def answer(row):
        clean = metric_batch(ds, row, cfg.metric)
        seed = derive_seed(seed_t, _NOISE, len(answers))
        n_eff = ds.positives.size if cfg.metric.conditions_on_positive else ds.n
        sub = ds.a[ds.positives] if cfg.metric.conditions_on_positive else ds.a
        n1 = int(sub.sum())
        out = _privatize(cfg, clean, eps, seed, n_eff, n_eff - n1, n1)
        clean_vals.append(float(clean.values[0]))
        answers.append(float(out.values[0]))
        return answers[-1]

    try:
        a_hat, failed = rec.partition_abs_sp(ds.n, answer).to_attributes(), False
    except FairleakError:
        # noisy answers rarely match a candidate exactly
        a_hat, failed = None, True
    return a_hat, np.array(answers), np.array(clean_vals), failed


def run_trial(cfg: ExperimentConfig, eps: float, t: int,
              source: tuple[Dataset, np.ndarray] | None = None) -> ExperimentRow:
    seed_t = cfg.seed + t
    start = time.perf_counter()
    ds, base = source if source is not None else gen_synthetic(cfg.n, cfg.n0, seed_t)

    failed = False
    answered = clean = np.zeros(0)
    try:
        if cfg.attack == "abs_partition":
            a_hat, answered, clean, failed = _attack_partition(cfg, ds, eps, seed_t)
        else:
            a_hat, answered, clean = _attack_linear(cfg, ds, base, eps, seed_t)
    except FairleakError:
        a_hat, failed = None, True
    if a_hat is None:
        guess = np.random.default_rng(derive_seed(seed_t, _GUESS)).integers(0, 2, ds.n)
        a_hat = guess.astype(np.int8)
        if cfg.metric.conditions_on_positive:
            a_hat[ds.y == 0] = rec.UNKNOWN

    leak = rec.leakage(ds.a, a_hat)
    err = float(np.mean(np.abs(answered - clean))) if answered.size else 0.0
    elapsed = (time.perf_counter() - start) * 1e3 if cfg.record_runtime else 0.0
    m = answered.size if answered.size else cfg.queries(ds.n, ds.n0)
    return ExperimentRow(trial=t, n=ds.n, n0=ds.n0, m=int(m), epsilon=eps,
                         mechanism=cfg.mechanism.value, avg_sp_err=err, leakage_pct=leak,
                         runtime_ms=elapsed, failed=failed)


def run_experiment(cfg: ExperimentConfig,
                   source: tuple[Dataset, np.ndarray] | None = None) -> list[ExperimentRow]:
    """Run every (epsilon, trial) cell; rows come back sorted by (epsilon, trial).

    ``source`` fixes one dataset and base row for all trials; otherwise each
    trial draws a synthetic dataset from its own seed ``cfg.seed + t``.
    """
    jobs = [(eps, t) for eps in cfg.epsilons for t in range(cfg.trials)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(run_trial, cfg, eps, t, source) for eps, t in jobs]
            rows = [f.result() for f in futures]
    else:
        rows = [run_trial(cfg, eps, t, source) for eps, t in jobs]
    return sorted(rows, key=lambda r: (r.epsilon, r.trial))


# ── result files ──


def _fmt(value) -> str:
    if isinstance(value, float):
        return "inf" if math.isinf(value) else repr(value)
    return str(value)


def emit_results(rows: list[ExperimentRow], fmt: str, path) -> None:
    if not rows:
        raise ValueError("no rows to emit")
    path = Path(path)
    try:
        if fmt == "csv":
            with path.open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(CSV_HEADER)
                for r in rows:
                    w.writerow([_fmt(getattr(r, k)) for k in CSV_HEADER])
        elif fmt == "json":
            recs = []
            for r in rows:
                record = r.as_record()
                if math.isinf(record["epsilon"]):
                    record["epsilon"] = "inf"
                recs.append(record)
            path.write_text(json.dumps(recs, indent=2) + "\n", encoding="utf-8")
        else:
            raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror}") from exc


_INT_KEYS = ("trial", "n", "n0", "m")


def _row_from_record(record: dict[str, Any]) -> ExperimentRow:
    kw = {k: record[k] for k in CSV_HEADER}
    for k in _INT_KEYS:
        kw[k] = int(kw[k])
    kw["epsilon"] = _parse_eps(kw["epsilon"])
    for k in ("avg_sp_err", "leakage_pct", "runtime_ms"):
        kw[k] = float(kw[k])
    kw["mechanism"] = str(kw["mechanism"])
    return ExperimentRow(**kw)


def load_results(path) -> list[ExperimentRow]:
    path = Path(path)
    if path.suffix == ".json":
        return [_row_from_record(r) for r in json.loads(path.read_text(encoding="utf-8"))]
    with path.open(newline="", encoding="utf-8") as fh:
        return [_row_from_record(r) for r in csv.DictReader(fh)]
