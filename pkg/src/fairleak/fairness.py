"""Datasets, prediction matrices and exact group-fairness metrics.

Every metric here is a finite-sample difference of group means,

    SP(h) = lambda / N1 - mu / N0,

where ``lambda`` and ``mu`` are the summed predictions over the advantaged
(``a == 1``) and disadvantaged (``a == 0``) individuals. Equal opportunity is
the same quantity on the sub-population with ``y == 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from .errors import EmptyGroupError


class Metric(str, Enum):
    SP = "SP"
    ABS_SP = "ABS_SP"
    EO = "EO"
    ABS_EO = "ABS_EO"

    @property
    def is_absolute(self) -> bool:
        return self in (Metric.ABS_SP, Metric.ABS_EO)

    @property
    def conditions_on_positive(self) -> bool:
        return self in (Metric.EO, Metric.ABS_EO)

    @classmethod
    def parse(cls, value: "Metric | str") -> "Metric":
        if isinstance(value, cls):
            return value
        return cls(str(value).upper())


class Mechanism(str, Enum):
    NONE = "none"
    LAPLACE_GLOBAL = "laplace_global"
    CAUCHY_SMOOTH = "cauchy_smooth"
    LAPLACE_SMOOTH = "laplace_smooth"

    @classmethod
    def parse(cls, value: "Mechanism | str") -> "Mechanism":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


def _binary_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ValueError(f"{name} must contain only 0/1 entries")
    return arr.astype(np.int8)


@dataclass(frozen=True)
class Dataset:
    """A test set held by the compliance side.

    ``a[j] == 1`` marks the advantaged group. ``features`` is optional and only
    used to train a base model.
    """

    y: np.ndarray
    a: np.ndarray
    features: np.ndarray | None = None

    def __post_init__(self):
        y = _binary_vector(self.y, "y")
        a = _binary_vector(self.a, "a")
        if y.shape != a.shape:
            raise ValueError(f"y and a differ in length ({y.size} vs {a.size})")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "a", a)
        if self.features is not None:
            x = np.asarray(self.features, dtype=float)
            if x.ndim != 2 or x.shape[0] != y.size:
                raise ValueError(
                    f"features must be an n x d matrix with n={y.size}, got {x.shape}"
                )
            object.__setattr__(self, "features", x)

    @property
    def n(self) -> int:
        return int(self.a.size)

    @property
    def n1(self) -> int:
        return int(self.a.sum())

    @property
    def n0(self) -> int:
        return self.n - self.n1

    @property
    def positives(self) -> np.ndarray:
        """Indices of individuals with ``y == 1``, ascending."""
        return np.flatnonzero(self.y == 1)

    def positive_subset(self) -> "Dataset":
        idx = self.positives
        feats = None if self.features is None else self.features[idx]
        return Dataset(y=self.y[idx], a=self.a[idx], features=feats)


@dataclass(frozen=True)
class PredictionMatrix:
    """An ``m x n`` matrix of model outputs; row ``i`` is model ``i``."""

    h: np.ndarray
    kind: str = "logistic"

    def __post_init__(self):
        h = np.array(self.h, dtype=float)
        if h.ndim == 1:
            h = h[None, :]
        if h.ndim != 2:
            raise ValueError(f"prediction matrix must be 2-D, got shape {h.shape}")
        if self.kind not in ("binary", "logistic"):
            raise ValueError(f"kind must be 'binary' or 'logistic', got {self.kind!r}")
        for i, row in enumerate(h):
            if not np.all(np.isfinite(row)):
                raise ValueError(f"row {i}: non-finite prediction")
            if np.any(row < 0.0) or np.any(row > 1.0):
                raise ValueError(f"row {i}: predictions must lie in [0, 1]")
            if self.kind == "binary" and not np.all((row == 0.0) | (row == 1.0)):
                raise ValueError(f"row {i}: binary predictions must be 0 or 1")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    @property
    def m(self) -> int:
        return int(self.h.shape[0])

    @property
    def n(self) -> int:
        return int(self.h.shape[1])


@dataclass(frozen=True)
class GroupSums:
    lam: float
    mu: float


@dataclass(frozen=True)
class QueryBatch:
    """Answered fairness queries, one value per model.

    ``meta`` carries mechanism bookkeeping (sensitivity, noise scale, flags).
    """

    values: np.ndarray
    metric: Metric
    privatized: bool = False
    mechanism: Mechanism = Mechanism.NONE
    epsilon: float | None = None
    delta: float | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(-1)
        metric = Metric.parse(self.metric)
        mech = Mechanism.parse(self.mechanism)
        if not self.privatized:
            lo = 0.0 if metric.is_absolute else -1.0
            # small slack for rounding in the group means
            if vals.size and (np.any(vals < lo - 1e-12) or np.any(vals > 1.0 + 1e-12)):
                raise ValueError(
                    f"unprivatized {metric.value} values must lie in [{lo:g}, 1]"
                )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "metric", metric)
        object.__setattr__(self, "mechanism", mech)

    @property
    def m(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.m


def group_sums(ds: Dataset, row) -> GroupSums:
    row = np.asarray(row, dtype=float)
    if row.shape != (ds.n,):
        raise ValueError(f"prediction row has length {row.size}, expected {ds.n}")
    return GroupSums(lam=float(row[ds.a == 1].sum()), mu=float(row[ds.a == 0].sum()))


def _check_groups(a: np.ndarray, what: str) -> tuple[int, int]:
    n1 = int(a.sum())
    n0 = int(a.size - n1)
    if n1 == 0 or n0 == 0:
        raise EmptyGroupError(f"{what}: N1={n1}, N0={n0}; both groups must be non-empty")
    return n1, n0


def _parity_rows(a: np.ndarray, h: np.ndarray, what: str) -> np.ndarray:
    n1, n0 = _check_groups(a, what)
    adv = a == 1
    lam = h[:, adv].sum(axis=1)
    mu = h[:, ~adv].sum(axis=1)
    return lam / n1 - mu / n0


def statistical_parity(ds: Dataset, row) -> float:
    """Statistical parity gap of one model: mean over ``a=1`` minus mean over ``a=0``."""
    row = np.asarray(row, dtype=float)
    if row.shape != (ds.n,):
        raise ValueError(f"prediction row has length {row.size}, expected {ds.n}")
    return float(_parity_rows(ds.a, row[None, :], "statistical parity")[0])


def equal_opportunity(ds: Dataset, row) -> float:
    """Statistical parity restricted to individuals with ``y == 1``."""
    row = np.asarray(row, dtype=float)
    if row.shape != (ds.n,):
        raise ValueError(f"prediction row has length {row.size}, expected {ds.n}")
    pos = ds.positives
    return float(_parity_rows(ds.a[pos], row[None, pos], "equal opportunity")[0])


def metric_batch(ds: Dataset, preds: PredictionMatrix | np.ndarray, metric) -> QueryBatch:
    """Evaluate ``metric`` for every row of ``preds``."""
    metric = Metric.parse(metric)
    h = preds.h if isinstance(preds, PredictionMatrix) else np.asarray(preds, dtype=float)
    if h.ndim == 1:
        h = h[None, :]
    if h.shape[0] == 0:
        return QueryBatch(values=np.zeros(0), metric=metric)
    if h.shape[1] != ds.n:
        raise ValueError(f"prediction matrix has {h.shape[1]} columns, expected {ds.n}")
    bad = np.flatnonzero(~np.all(np.isfinite(h), axis=1))
    if bad.size:
        raise ValueError(f"row {int(bad[0])}: non-finite prediction")
    if metric.conditions_on_positive:
        pos = ds.positives
        vals = _parity_rows(ds.a[pos], h[:, pos], "equal opportunity")
    else:
        vals = _parity_rows(ds.a, h, "statistical parity")
    if metric.is_absolute:
        vals = np.abs(vals)
    return QueryBatch(values=vals, metric=metric)
