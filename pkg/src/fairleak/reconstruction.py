"""Attribute reconstruction from answered fairness queries.

The attacker controls the prediction matrix ``H`` and sees ``SP = H v`` where
``v[j] = 1/N1`` for advantaged and ``-1/N0`` for disadvantaged individuals.
Full-rank plans solve for ``v`` directly. Compressed-sensing plans write
``v = r - s`` with ``r = (1/N1, ..., 1/N1)``; then ``s`` is ``N0``-sparse and
``H s = H r - SP``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from . import solvers
from .errors import AmbiguousResponseError, EmptyGroupError, ZeroResponseError
from .fairness import Dataset, PredictionMatrix, QueryBatch

UNKNOWN = -1
"""Sentinel in ``a_hat`` for individuals the attack learns nothing about."""

AnswerFn = Callable[[np.ndarray], float]


class Strategy(str, Enum):
    FULL_RANK = "full_rank"
    COMPRESSED_SENSING = "compressed_sensing"
    SINGLE_QUERY = "single_query"
    DOUBLE_QUERY = "double_query"
    ABS_PARTITION = "abs_partition"


@dataclass(frozen=True)
class AttackPlan:
    """The models an attacker submits, one row of ``matrix`` per query.

    When ``probe_included`` is set, the final row is the single-acceptor probe
    used to learn the group sizes and is not part of the attack system.
    ``sensing`` records how compressed-sensing rows were drawn
    (``"uniform_noise"`` around a base model, or ``"random_binary"``).
    """

    strategy: Strategy
    base_row: np.ndarray | None
    matrix: PredictionMatrix
    probe_included: bool = False
    sensing: str | None = None
    target: int | None = None

    @property
    def n(self) -> int:
        return self.matrix.n

    @property
    def attack_rows(self) -> np.ndarray:
        h = self.matrix.h
        return h[:-1] if self.probe_included else h


@dataclass(frozen=True)
class ReconstructionReport:
    a_hat: np.ndarray
    n1_est: int
    n0_est: int
    v: np.ndarray | None = None
    s: np.ndarray | None = None
    leakage_pct: float | None = None
    queries: int = 0


@dataclass(frozen=True)
class PartitionResult:
    labels: np.ndarray  # "alpha" / "beta"
    size_alpha: int
    size_beta: int
    queries: int

    def to_attributes(self) -> np.ndarray:
        """Map partitions to attributes, taking the smaller partition as ``a = 0``."""
        small = "beta" if self.size_beta < self.size_alpha else "alpha"
        if self.size_alpha == self.size_beta:
            small = "beta"
        return np.where(self.labels == small, 0, 1).astype(np.int8)


def _unit_row(n: int, *idx: int) -> np.ndarray:
    row = np.zeros(n)
    row[list(idx)] = 1.0
    return row


# ── plans ──


def plan_full_rank(base_row, n: int) -> AttackPlan:
    """``n`` models equal to a binary base model except that model ``i`` flips individual ``i``."""
    base = np.asarray(base_row, dtype=float)
    if base.shape != (n,):
        raise ValueError(f"base_row has length {base.size}, expected {n}")
    if not np.all((base == 0.0) | (base == 1.0)):
        raise ValueError("full-rank plans need a binary base row")
    H = np.tile(base, (n, 1))
    idx = np.arange(n)
    H[idx, idx] = 1.0 - base
    return AttackPlan(Strategy.FULL_RANK, base, PredictionMatrix(H, kind="binary"))


def plan_compressed_sensing(base_row, n: int, m: int, rng_seed: int) -> AttackPlan:
    """``m`` perturbed copies of a base model: ``clip(base + U(-0.1, 0.1), 0, 1)``."""
    base = np.asarray(base_row, dtype=float)
    if base.shape != (n,):
        raise ValueError(f"base_row has length {base.size}, expected {n}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if np.any(base < 0.0) or np.any(base > 1.0):
        raise ValueError("base_row entries must lie in [0, 1]")
    rng = np.random.default_rng(rng_seed)
    noise = rng.uniform(-0.1, 0.1, size=(m, n))
    H = np.clip(base[None, :] + noise, 0.0, 1.0)
    return AttackPlan(Strategy.COMPRESSED_SENSING, base, PredictionMatrix(H),
                      sensing="uniform_noise")


def plan_random_binary(n: int, m: int, rng_seed: int) -> AttackPlan:
    """``m`` models with i.i.d. fair-coin accept/reject decisions."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    rng = np.random.default_rng(rng_seed)
    H = rng.integers(0, 2, size=(m, n)).astype(float)
    return AttackPlan(Strategy.COMPRESSED_SENSING, None, PredictionMatrix(H, kind="binary"),
                      sensing="random_binary")


def plan_single_query(n: int, target: int = 0) -> AttackPlan:
    return AttackPlan(Strategy.SINGLE_QUERY, None,
                      PredictionMatrix(_unit_row(n, target), kind="binary"), target=target)


def plan_double_query(base_row, target: int = 0) -> AttackPlan:
    """A base model and a copy that differs only on ``target``."""
    base = np.asarray(base_row, dtype=float)
    flipped = base.copy()
    flipped[target] = 1.0 - base[target]
    kind = "binary" if np.all((base == 0.0) | (base == 1.0)) else "logistic"
    return AttackPlan(Strategy.DOUBLE_QUERY, base,
                      PredictionMatrix(np.vstack([base, flipped]), kind=kind), target=target)


def with_probe(plan: AttackPlan) -> AttackPlan:
    """Append the single-acceptor probe row for individual 0."""
    if plan.probe_included:
        return plan
    h = np.vstack([plan.matrix.h, _unit_row(plan.n, 0)])
    kind = plan.matrix.kind
    return AttackPlan(plan.strategy, plan.base_row, PredictionMatrix(h, kind=kind),
                      probe_included=True, sensing=plan.sensing, target=plan.target)


# ── group sizes ──


def sizes_from_probe(n: int, answer: float) -> tuple[int, int]:
    """Invert a single-acceptor SP answer into ``(n1_est, n0_est)``.

    A clean answer is ``1/N1`` or ``-1/N0``. Noisy answers can round to an
    impossible size; estimates are clamped into ``[1, n - 1]``.
    """
    if not math.isfinite(answer):
        raise ZeroResponseError(f"probe answer is not finite: {answer}")
    if answer == 0.0:
        raise ZeroResponseError("probe answer is exactly 0; group sizes cannot be inverted")
    size = round(1.0 / abs(answer))
    size = min(max(size, 1), n - 1)
    if answer > 0:
        return size, n - size
    return n - size, size


def _population(ds_or_n) -> int:
    return ds_or_n.n if isinstance(ds_or_n, Dataset) else int(ds_or_n)


def probe_group_sizes(ds_or_n, answer_fn: AnswerFn) -> tuple[int, int]:
    """Spend one SP query on the model accepting only individual 0.

    Only the population size is read from a :class:`Dataset`; the attributes
    stay behind ``answer_fn``.
    """
    n = _population(ds_or_n)
    return sizes_from_probe(n, float(answer_fn(_unit_row(n, 0))))


def _split_answers(plan: AttackPlan, answers, n1, n0) -> tuple[np.ndarray, int, int]:
    vals = answers.values if isinstance(answers, QueryBatch) else np.asarray(answers, float)
    if vals.size != plan.matrix.m:
        raise ValueError(f"got {vals.size} answers for a plan with {plan.matrix.m} queries")
    if plan.probe_included:
        probe = float(vals[-1])
        vals = vals[:-1]
        if n1 is None or n0 is None:
            n1, n0 = sizes_from_probe(plan.n, probe)
    if n1 is None or n0 is None:
        raise ValueError("group sizes not supplied and the plan carries no probe query")
    return vals, int(n1), int(n0)


# ── scoring ──


def leakage(a_true, a_hat) -> float:
    """Balanced recovery accuracy in percent; ``UNKNOWN`` entries are ignored."""
    a_true = np.asarray(a_true)
    a_hat = np.asarray(a_hat)
    if a_true.shape != a_hat.shape:
        raise ValueError(f"shape mismatch: {a_true.shape} vs {a_hat.shape}")
    known = a_hat != UNKNOWN
    adv = known & (a_true == 1)
    dis = known & (a_true == 0)
    n1, n0 = int(adv.sum()), int(dis.sum())
    if n1 == 0 or n0 == 0:
        raise EmptyGroupError(f"leakage needs both groups present (N1={n1}, N0={n0})")
    hit_a = int(np.sum(a_hat[adv] == 1))
    hit_b = int(np.sum(a_hat[dis] == 0))
    return 50.0 * (hit_a / n1 + hit_b / n0)


def _report(a_hat, v=None, s=None, a_true=None, queries=0) -> ReconstructionReport:
    a_hat = np.asarray(a_hat, dtype=np.int8)
    known = a_hat[a_hat != UNKNOWN]
    n1_est = int(np.sum(known == 1))
    pct = None if a_true is None else leakage(a_true, a_hat)
    return ReconstructionReport(a_hat=a_hat, n1_est=n1_est, n0_est=int(known.size - n1_est),
                                v=v, s=s, leakage_pct=pct, queries=queries)


# ── reveal ──


def reveal_full_rank(plan: AttackPlan, answers, n1: int | None = None,
                     n0: int | None = None, a_true=None) -> ReconstructionReport:
    """Solve ``SP = H v`` and read attributes off the sign of ``v``."""
    if plan.strategy is not Strategy.FULL_RANK:
        raise ValueError(f"expected a full_rank plan, got {plan.strategy.value}")
    vals, _, _ = _split_answers(plan, answers, n1 if n1 is not None else 1,
                                n0 if n0 is not None else 1)
    v = solvers.solve_full_rank(solvers.LinearSystem(plan.attack_rows, vals))
    a_hat = (v > 0).astype(np.int8)
    return _report(a_hat, v=v, a_true=a_true, queries=plan.matrix.m)


def reveal_compressed_sensing(plan: AttackPlan, answers, n1: int | None = None,
                              n0: int | None = None, solver: str = "bp",
                              a_true=None, eq_tol: float = solvers.EQ_TOL,
                              ) -> ReconstructionReport:
    """Recover the sparse indicator ``s`` and threshold it at ``(1/N1 + 1/N0) / 2``.

    ``solver="omp"`` runs pursuit on the model-centred system (each column
    minus its mean over models), since every row shares the base model and the
    raw columns are nearly collinear.
    """
    if plan.strategy is not Strategy.COMPRESSED_SENSING:
        raise ValueError(f"expected a compressed_sensing plan, got {plan.strategy.value}")
    vals, n1, n0 = _split_answers(plan, answers, n1, n0)
    if n0 > n1:
        warnings.warn(f"N0={n0} exceeds N1={n1}; the indicator vector is not sparse",
                      stacklevel=2)
    H = plan.attack_rows
    n = plan.n
    r = np.full(n, 1.0 / n1)
    eta = H @ r - vals
    if solver == "bp":
        sol = solvers.basis_pursuit(solvers.LinearSystem(H, eta), eq_tol=eq_tol)
    elif solver == "omp":
        Hc = H - H.mean(axis=0)
        k = min(n0, Hc.shape[0], n)
        sol = solvers.omp(solvers.LinearSystem(Hc, eta - eta.mean()), k, eq_tol=eq_tol)
    else:
        raise ValueError(f"unknown solver {solver!r}; expected 'bp' or 'omp'")
    s = sol.s
    cut = 0.5 * (1.0 / n1 + 1.0 / n0)
    a_hat = np.where(s > cut, 0, 1).astype(np.int8)
    return _report(a_hat, v=r - s, s=s, a_true=a_true, queries=plan.matrix.m)


def reveal_equal_opportunity(plan: AttackPlan, answers, ds: Dataset,
                             n1_pos: int | None = None, n0_pos: int | None = None,
                             solver: str = "bp", eq_tol: float = solvers.EQ_TOL,
                             ) -> ReconstructionReport:
    """Run the SP pipeline on the ``y == 1`` columns; others come back ``UNKNOWN``.

    ``plan`` must be built over the positive sub-population, in ascending
    index order. Only ``ds.y`` is used for the attack; ``ds.a`` is used to
    score leakage.
    """
    pos = ds.positives
    if pos.size == 0:
        raise EmptyGroupError("no individuals with y == 1")
    if plan.n != pos.size:
        raise ValueError(f"plan has {plan.n} columns but there are {pos.size} positives")
    if plan.strategy is Strategy.FULL_RANK:
        sub = reveal_full_rank(plan, answers, n1_pos, n0_pos)
    else:
        sub = reveal_compressed_sensing(plan, answers, n1_pos, n0_pos, solver=solver,
                                        eq_tol=eq_tol)
    a_hat = np.full(ds.n, UNKNOWN, dtype=np.int8)
    a_hat[pos] = sub.a_hat
    return _report(a_hat, v=sub.v, s=sub.s, a_true=ds.a, queries=sub.queries)


def reveal_single_query(answer: float) -> int:
    """Attribute of the lone accepted individual: positive gap means advantaged."""
    if answer == 0.0:
        raise ZeroResponseError("single-query answer is exactly 0")
    return 1 if answer > 0 else 0


def reveal_double_query(plan: AttackPlan, answers) -> int:
    """Attribute of the flipped individual from the difference of two answers.

    Flipping prediction ``j`` by ``d`` moves SP by ``d/N1`` (advantaged) or
    ``-d/N0`` (disadvantaged), so the sign of ``(SP2 - SP1) * d`` decides.
    """
    if plan.strategy is not Strategy.DOUBLE_QUERY:
        raise ValueError(f"expected a double_query plan, got {plan.strategy.value}")
    vals = answers.values if isinstance(answers, QueryBatch) else np.asarray(answers, float)
    j = plan.target
    d = plan.matrix.h[1, j] - plan.matrix.h[0, j]
    diff = (vals[1] - vals[0]) * d
    if diff == 0.0:
        raise ZeroResponseError("double-query answers are identical")
    return 1 if diff > 0 else 0


def partition_abs_sp(ds_or_n, answer_fn: AnswerFn, match_tol: float = 1e-9) -> PartitionResult:
    """Split individuals into two groups using absolute-SP queries only.

    Individual 0 defines partition alpha; its single-acceptor answer
    ``1/N_alpha`` fixes both sizes. With unequal sizes each other individual is
    probed alone (answer ``1/N_alpha`` or ``1/N_beta``); with equal sizes it is
    probed together with individual 0 (answer ``2/N_alpha`` if it shares the
    group, else 0). Uses exactly ``n`` queries.
    """
    n = _population(ds_or_n)
    if n < 2:
        raise ValueError("need at least two individuals")
    first = abs(float(answer_fn(_unit_row(n, 0))))
    if not math.isfinite(first) or first == 0.0:
        raise ZeroResponseError(f"first |SP| answer cannot be inverted: {first}")
    n_alpha = min(max(round(1.0 / first), 1), n - 1)
    n_beta = n - n_alpha
    labels = np.empty(n, dtype="<U5")
    labels[0] = "alpha"
    queries = 1

    if n_alpha != n_beta:
        cand = {"alpha": 1.0 / n_alpha, "beta": 1.0 / n_beta}
        rows = ((j, _unit_row(n, j)) for j in range(1, n))
    else:
        cand = {"alpha": 2.0 / n_alpha, "beta": 0.0}
        rows = ((j, _unit_row(n, 0, j)) for j in range(1, n))

    for j, row in rows:
        ans = abs(float(answer_fn(row)))
        queries += 1
        hits = [k for k, val in cand.items() if abs(ans - val) <= match_tol]
        if len(hits) != 1:
            raise AmbiguousResponseError(
                f"individual {j}: |SP|={ans:.6g} matches {hits or 'neither'} of "
                f"{ {k: round(v, 6) for k, v in cand.items()} }"
            )
        labels[j] = hits[0]

    size_alpha = int(np.sum(labels == "alpha"))
    return PartitionResult(labels=labels, size_alpha=size_alpha,
                           size_beta=n - size_alpha, queries=queries)
