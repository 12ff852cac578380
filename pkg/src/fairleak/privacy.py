"""Sensitivity bounds and noise mechanisms for privatized fairness queries.

Neighbouring datasets differ in one protected attribute. For ``m`` SP
queries the global l1 sensitivity is ``m/2 + m/(n-1)``; the smooth
sensitivity damps the local sensitivity at distance ``k`` by ``exp(-k beta)``
and is maximised at one end of ``k in {0, ..., N0-2}``.

All randomness comes from ``numpy.random.default_rng(seed)`` (PCG64). Uniforms
on the open interval ``(0, 1)`` are ``(K + 1/2) / 2**53`` with ``K`` a uniform
53-bit integer, then mapped through inverse CDFs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .fairness import Mechanism, Metric, QueryBatch

BRUTE_FORCE_MAX_N = 8
CAUCHY_FACTOR = 6.0
LAPLACE_SMOOTH_FACTOR = 2.0


@dataclass(frozen=True)
class SensitivityBound:
    value: float
    kind: str  # "global" | "smooth"
    metric: Metric
    m: int
    n: int
    n0: int | None = None
    n1: int | None = None
    beta: float | None = None
    epsilon: float | None = None
    delta: float | None = None

    def __post_init__(self):
        if not self.value >= 0.0:
            raise DomainError(f"sensitivity must be non-negative, got {self.value}")
        if self.kind not in ("global", "smooth"):
            raise ValueError(f"kind must be 'global' or 'smooth', got {self.kind!r}")
        if self.kind == "smooth" and not (self.beta is not None and self.beta > 0):
            raise DomainError("smooth sensitivity needs beta > 0")

    def __float__(self) -> float:
        return float(self.value)


# ── global sensitivity ──


def global_sensitivity(metric, m: int, n: int) -> SensitivityBound:
    """Worst-case l1 change of ``m`` answers when one attribute flips.

    For EO pass the number of ``y == 1`` individuals as ``n``.
    """
    metric = Metric.parse(metric)
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    if metric.is_absolute:
        if n < 2:
            raise DomainError(f"|SP| sensitivity needs n >= 2, got {n}")
        value = m / 2.0
    else:
        if n < 3:
            raise DomainError(f"SP sensitivity needs n >= 3, got {n}")
        value = m / 2.0 + m / (n - 1.0)
    return SensitivityBound(value=value, kind="global", metric=metric, m=m, n=n)


def brute_force_global(metric, n: int, m: int = 1) -> Fraction:
    """Exact global sensitivity by enumeration, for ``n <= 8``.

    Ranges over every binary prediction row, every attribute vector and every
    single-attribute flip, keeping pairs where both datasets have both groups
    non-empty. SP values are scaled by ``lcm(1..n)`` so all arithmetic is in
    integers; the maximum is returned as a :class:`~fractions.Fraction`.
    """
    metric = Metric.parse(metric)
    if n > BRUTE_FORCE_MAX_N:
        raise DomainError(f"brute force is limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")
    if n < 2:
        raise DomainError(f"need n >= 2, got {n}")
    scale = math.lcm(*range(1, n + 1))

    bits = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int64)
    bits = bits[:, ::-1]  # row k holds the binary digits of k, bit j in column j
    n1 = bits.sum(axis=1)
    n0 = n - n1
    valid = (n1 > 0) & (n0 > 0)

    lam = bits @ bits.T  # lam[h, a]
    mu = bits @ (1 - bits).T
    sp = lam * (scale // np.maximum(n1, 1))[None, :] - mu * (scale // np.maximum(n0, 1))[None, :]
    if metric.is_absolute:
        sp = np.abs(sp)

    idx = np.arange(bits.shape[0])
    best = 0
    for j in range(n):
        nb = idx ^ (1 << j)
        ok = valid & valid[nb]
        diff = np.abs(sp[:, ok] - sp[:, nb[ok]])
        if diff.size:
            best = max(best, int(diff.max()))
    return Fraction(best * m, scale)


# ── smooth sensitivity ──


def _smooth_domain(n0: int, n1: int | None, n: int | None, beta: float) -> None:
    if n0 < 2:
        raise DomainError(f"smooth sensitivity needs N0 >= 2, got {n0}")
    if n1 is not None and n1 < 1:
        raise DomainError(f"N1 must be >= 1, got {n1}")
    if n is not None and n1 is not None and n0 + n1 != n:
        raise DomainError(f"N0 + N1 = {n0 + n1} does not equal n = {n}")
    if not beta > 0:
        raise DomainError(f"beta must be > 0, got {beta}")


def _minority_first(n0: int, n1: int) -> tuple[int, int]:
    # SP is antisymmetric in the two groups; the bound is driven by the smaller one
    return (n0, n1) if n0 <= n1 else (n1, n0)


def smooth_sensitivity_sp(m: int, n: int, n0: int, n1: int, beta: float) -> SensitivityBound:
    """``max(m/(N1+1) + m/N0, exp(-(N0-2) beta) (m/(n-1) + m/2))``.

    The formula assumes ``N0 <= N1``; otherwise the group roles are swapped.
    """
    small, large = _minority_first(n0, n1)
    _smooth_domain(small, large, n, beta)
    local = m / (large + 1.0) + m / small
    edge = math.exp(-(small - 2) * beta) * (m / (n - 1.0) + m / 2.0)
    return SensitivityBound(value=max(local, edge), kind="smooth", metric=Metric.SP,
                            m=m, n=n, n0=n0, n1=n1, beta=beta)


def smooth_sensitivity_abs_sp(m: int, n0: int, beta: float, n: int | None = None) -> SensitivityBound:
    """``max(m/N0, m exp(-(N0-2) beta) / 2)``."""
    _smooth_domain(n0, None, None, beta)
    value = max(m / n0, m * math.exp(-(n0 - 2) * beta) / 2.0)
    return SensitivityBound(value=value, kind="smooth", metric=Metric.ABS_SP,
                            m=m, n=n if n is not None else 0, n0=n0,
                            n1=None if n is None else n - n0, beta=beta)


def brute_force_smooth(metric, m: int, n: int, n0: int, beta: float) -> float:
    """Maximise ``exp(-k beta) * LS_k`` over every ``k in 0..N0-2``.

    ``LS_k`` is the local sensitivity after moving ``k`` disadvantaged
    individuals into the advantaged group: ``m/(N1+k+1) + m/(N0-k)`` for SP
    and ``m/(N0-k)`` for |SP|.
    """
    metric = Metric.parse(metric)
    small, large = _minority_first(n0, n - n0)
    _smooth_domain(small, large, n, beta)
    k = np.arange(0, small - 1, dtype=float)
    damp = np.exp(-k * beta)
    if metric.is_absolute:
        terms = damp * (m / (small - k))
    else:
        terms = damp * (m / (large + k + 1.0) + m / (small - k))
    return float(terms.max())


# ── samplers ──


def open_uniform(rng: np.random.Generator, size) -> np.ndarray:
    """Uniforms strictly inside ``(0, 1)`` on a 2**-53 grid."""
    k = rng.integers(0, 2**53, size=size, dtype=np.int64)
    return (k + 0.5) / 2.0**53


def laplace_from_uniform(u: np.ndarray) -> np.ndarray:
    c = np.asarray(u, dtype=float) - 0.5
    return -np.sign(c) * np.log1p(-2.0 * np.abs(c))


def cauchy_from_uniform(u: np.ndarray) -> np.ndarray:
    return np.tan(np.pi * (np.asarray(u, dtype=float) - 0.5))


def sample_laplace(size, seed: int, scale: float = 1.0) -> np.ndarray:
    return scale * laplace_from_uniform(open_uniform(np.random.default_rng(seed), size))


def sample_cauchy(size, seed: int, scale: float = 1.0) -> np.ndarray:
    return scale * cauchy_from_uniform(open_uniform(np.random.default_rng(seed), size))


@dataclass(frozen=True)
class NoiseSpec:
    family: str  # "laplace" | "cauchy"
    scale: float
    dimension: int
    seed: int

    def __post_init__(self):
        if self.family not in ("laplace", "cauchy"):
            raise ValueError(f"family must be 'laplace' or 'cauchy', got {self.family!r}")
        if not self.scale > 0:
            raise DomainError(f"noise scale must be > 0, got {self.scale}")

    def standard(self) -> np.ndarray:
        """Unit-scale draws for this spec's seed and dimension."""
        sampler = sample_laplace if self.family == "laplace" else sample_cauchy
        return sampler(self.dimension, self.seed)

    def sample(self) -> np.ndarray:
        return self.scale * self.standard()


# ── mechanisms ──


def _check_batch(batch: QueryBatch, allowed: tuple[Metric, ...]) -> None:
    if batch.privatized:
        raise ValueError("batch is already privatized")
    if batch.metric not in allowed:
        names = ", ".join(a.value for a in allowed)
        raise ValueError(f"mechanism expects a {names} batch, got {batch.metric.value}")


def _check_epsilon(epsilon: float) -> None:
    if not epsilon > 0:
        raise DomainError(f"epsilon must be > 0, got {epsilon}")


def _release(batch: QueryBatch, mechanism: Mechanism, family: str, scale: float,
             epsilon: float, seed: int, z, delta=None, **meta) -> QueryBatch:
    if z is None:
        if math.isinf(epsilon) or batch.m == 0:
            z = np.zeros(batch.m)
        else:
            z = NoiseSpec(family, scale, batch.m, seed).standard()
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.size != batch.m:
        raise ValueError(f"noise has {z.size} entries for a batch of {batch.m}")
    values = batch.values + scale * z if scale > 0 else batch.values.copy()
    return QueryBatch(values=values, metric=batch.metric, privatized=True, mechanism=mechanism,
                      epsilon=epsilon, delta=delta,
                      meta={"family": family, "scale": scale, "seed": seed, **meta})


def laplace_global_mechanism(batch: QueryBatch, n: int, epsilon: float, seed: int,
                             z=None) -> QueryBatch:
    """Add i.i.d. ``Laplace(Delta/epsilon)`` to each answer.

    ``n`` is the population the metric is computed on (positives for EO).
    ``z`` fixes a unit-scale noise realisation instead of sampling.
    """
    _check_batch(batch, tuple(Metric))
    _check_epsilon(epsilon)
    sens = global_sensitivity(batch.metric, max(batch.m, 1), n).value
    scale = 0.0 if math.isinf(epsilon) else sens / epsilon
    return _release(batch, Mechanism.LAPLACE_GLOBAL, "laplace", scale, epsilon, seed, z,
                    sensitivity=sens)


def conceal_sp_cauchy(batch: QueryBatch, n: int, n0: int, n1: int, epsilon: float,
                      seed: int, z=None) -> QueryBatch:
    """Smooth-sensitivity Cauchy mechanism: ``SP + (6 S / epsilon) Z``, ``beta = epsilon / 6m``."""
    _check_batch(batch, (Metric.SP, Metric.EO))
    _check_epsilon(epsilon)
    m = max(batch.m, 1)
    if math.isinf(epsilon):
        return _release(batch, Mechanism.CAUCHY_SMOOTH, "cauchy", 0.0, epsilon, seed, z)
    beta = epsilon / (CAUCHY_FACTOR * m)
    sens = smooth_sensitivity_sp(m, n, n0, n1, beta).value
    scale = CAUCHY_FACTOR * sens / epsilon
    return _release(batch, Mechanism.CAUCHY_SMOOTH, "cauchy", scale, epsilon, seed, z,
                    sensitivity=sens, beta=beta)


def conceal_sp_laplace_smooth(batch: QueryBatch, n: int, n0: int, n1: int, epsilon: float,
                              delta: float, seed: int, z=None) -> QueryBatch:
    """(epsilon, delta) mechanism: ``SP + (2 S / epsilon) Z`` with Laplace ``Z``.

    ``beta = epsilon / (4 (m + ln(2/delta)))``. The guarantee is stated for
    ``epsilon < 1``; larger values are allowed and flagged in ``meta``.
    """
    _check_batch(batch, (Metric.SP, Metric.EO))
    _check_epsilon(epsilon)
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    m = max(batch.m, 1)
    flag = {"epsilon_outside_guarantee": bool(epsilon >= 1.0)}
    if math.isinf(epsilon):
        return _release(batch, Mechanism.LAPLACE_SMOOTH, "laplace", 0.0, epsilon, seed, z,
                        delta=delta, **flag)
    beta = epsilon / (4.0 * (m + math.log(2.0 / delta)))
    sens = smooth_sensitivity_sp(m, n, n0, n1, beta).value
    scale = LAPLACE_SMOOTH_FACTOR * sens / epsilon
    return _release(batch, Mechanism.LAPLACE_SMOOTH, "laplace", scale, epsilon, seed, z,
                    delta=delta, sensitivity=sens, beta=beta, **flag)


def conceal_abs_sp(batch: QueryBatch, n: int, n0: int, epsilon: float, seed: int,
                   z=None) -> QueryBatch:
    """Cauchy mechanism on |SP| answers with the |SP| smooth sensitivity."""
    _check_batch(batch, (Metric.ABS_SP, Metric.ABS_EO))
    _check_epsilon(epsilon)
    if not 2 <= n0 < n:
        raise DomainError(f"need 2 <= N0 < n, got N0={n0}, n={n}")
    m = max(batch.m, 1)
    if math.isinf(epsilon):
        return _release(batch, Mechanism.CAUCHY_SMOOTH, "cauchy", 0.0, epsilon, seed, z)
    beta = epsilon / (CAUCHY_FACTOR * m)
    sens = smooth_sensitivity_abs_sp(m, min(n0, n - n0), beta, n=n).value
    scale = CAUCHY_FACTOR * sens / epsilon
    return _release(batch, Mechanism.CAUCHY_SMOOTH, "cauchy", scale, epsilon, seed, z,
                    sensitivity=sens, beta=beta)
