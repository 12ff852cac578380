"""Synthetic datasets, CSV ingestion and a logistic-regression base model."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError, DivergenceError, EmptyGroupError
from .fairness import Dataset

_FEATURE_COL = re.compile(r"^f\d+$")
MODES = ("scores", "features")


def gen_synthetic(n: int, n0: int, seed: int) -> tuple[Dataset, np.ndarray]:
    """Random dataset with exactly ``n0`` disadvantaged individuals.

    Labels are fair coin flips and the base scores are i.i.d. ``Uniform(0, 1)``,
    drawn independently of the attribute.
    """
    if not 1 <= n0 < n:
        raise ValueError(f"need 1 <= n0 < n, got n0={n0}, n={n}")
    rng = np.random.default_rng(seed)
    a = np.ones(n, dtype=np.int8)
    a[rng.choice(n, size=n0, replace=False)] = 0
    y = rng.integers(0, 2, size=n).astype(np.int8)
    base = rng.random(n)
    return Dataset(y=y, a=a), base


# ── baseline model ──


def train_baseline(features, y, epochs: int = 500, lr: float = 0.1, seed: int = 0) -> np.ndarray:
    """Logistic regression by full-batch gradient descent; returns in-sample scores.

    Features are standardised (constant columns are left centred at 0).
    Weights start at zero, so the fit is fully deterministic and ``seed`` only
    exists for interface symmetry.
    """
    X = np.asarray(features, dtype=float)
    t = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != t.size:
        raise ValueError(f"features must be n x d with n={t.size}, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")
    if not np.all((t == 0) | (t == 1)):
        raise ValueError("labels must be 0/1")
    sd = X.std(axis=0)
    Z = (X - X.mean(axis=0)) / np.where(sd > 0, sd, 1.0)

    w = np.zeros(Z.shape[1])
    b = 0.0
    n = t.size
    for _ in range(epochs):
        z = Z @ w + b
        p = _sigmoid(z)
        loss = float(np.mean(np.logaddexp(0.0, z) - t * z))
        if not np.isfinite(loss):
            raise DivergenceError(f"training loss became non-finite (lr={lr})")
        g = p - t
        w -= lr * (Z.T @ g) / n
        b -= lr * float(g.mean())
    return _sigmoid(Z @ w + b)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


# ── CSV ──


@dataclass(frozen=True)
class TabularSource:
    ids: list[str]
    y: np.ndarray
    a: np.ndarray
    mode: str
    scores: np.ndarray | None = None
    features: np.ndarray | None = None


def _encode(raw: str, mapping: dict[str, int] | None, column: str, line: int) -> int:
    key = raw.strip()
    if mapping is not None:
        if key not in mapping:
            raise DataFormatError(f"column {column!r}: value {key!r} not in mapping", line)
        return mapping[key]
    if key not in ("0", "1"):
        raise DataFormatError(f"column {column!r} must be 0/1, got {key!r}", line)
    return int(key)


def _number(raw: str, column: str, line: int) -> float:
    try:
        val = float(raw)
    except ValueError:
        raise DataFormatError(f"column {column!r}: {raw!r} is not a number", line) from None
    if not np.isfinite(val):
        raise DataFormatError(f"column {column!r}: non-finite value {raw!r}", line)
    return val


def read_tabular(path, mode: str = "scores", a_map: dict[str, int] | None = None,
                 y_map: dict[str, int] | None = None) -> TabularSource:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataFormatError(f"{path}: file is empty", 1) from None
        need = ["id", "y", "a"] + (["score"] if mode == "scores" else [])
        for col in need:
            if col not in header:
                raise DataFormatError(f"{path}: missing required column {col!r}", 1)
        pos = {name: header.index(name) for name in need}
        fcols = [i for i, h in enumerate(header) if _FEATURE_COL.match(h)]
        if mode == "features" and not fcols:
            raise DataFormatError(f"{path}: features mode needs columns f1..fd", 1)

        ids, ys, as_, scores, feats = [], [], [], [], []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(f"expected {len(header)} fields, got {len(row)}", line)
            ids.append(row[pos["id"]].strip())
            ys.append(_encode(row[pos["y"]], y_map, "y", line))
            as_.append(_encode(row[pos["a"]], a_map, "a", line))
            if mode == "scores":
                sc = _number(row[pos["score"]], "score", line)
                if not 0.0 <= sc <= 1.0:
                    raise DataFormatError(f"score {sc} outside [0, 1]", line)
                scores.append(sc)
            else:
                feats.append([_number(row[i], header[i], line) for i in fcols])

    if not ids:
        raise DataFormatError(f"{path}: no data rows", 2)
    return TabularSource(
        ids=ids,
        y=np.array(ys, dtype=np.int8),
        a=np.array(as_, dtype=np.int8),
        mode=mode,
        scores=np.array(scores) if mode == "scores" else None,
        features=np.array(feats) if mode == "features" else None,
    )


def ingest_csv(path, mode: str = "scores", a_map: dict[str, int] | None = None,
               y_map: dict[str, int] | None = None, epochs: int = 500, lr: float = 0.1,
               seed: int = 0) -> tuple[Dataset, np.ndarray]:
    """Load a dataset and its base-model scores.

    In ``features`` mode the scores come from :func:`train_baseline`.
    """
    src = read_tabular(path, mode, a_map=a_map, y_map=y_map)
    n1 = int(src.a.sum())
    if n1 == 0 or n1 == src.a.size:
        raise EmptyGroupError(f"{path}: attribute column has a single group (N1={n1})")
    if mode == "scores":
        return Dataset(y=src.y, a=src.a), src.scores
    base = train_baseline(src.features, src.y, epochs=epochs, lr=lr, seed=seed)
    return Dataset(y=src.y, a=src.a, features=src.features), base


def write_scores_csv(path, ds: Dataset, base_row, ids=None) -> None:
    path = Path(path)
    ids = ids if ids is not None else [str(i) for i in range(ds.n)]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "y", "a", "score"])
        for i, y, a, s in zip(ids, ds.y, ds.a, base_row):
            w.writerow([i, int(y), int(a), repr(float(s))])


def parse_mapping(text: str | None) -> dict[str, int] | None:
    """``"White=1,Black=0"`` -> ``{"White": 1, "Black": 0}``."""
    if not text:
        return None
    out: dict[str, int] = {}
    for part in text.split(","):
        key, sep, val = part.partition("=")
        if not sep or val.strip() not in ("0", "1"):
            raise ValueError(f"bad mapping entry {part!r}; expected name=0 or name=1")
        out[key.strip()] = int(val)
    return out
