"""Linear-algebra kernel for the reconstruction attacks.

Three solvers over a system ``H s = rhs``:

* :func:`solve_full_rank` -- least squares for tall or square full-column-rank ``H``;
* :func:`basis_pursuit` -- minimum L1-norm solution, posed as a linear program;
* :func:`omp` -- orthogonal matching pursuit, the greedy alternative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _simplex
from .errors import DegenerateColumnError, InfeasibleError, RankDeficientError

EQ_TOL = 1e-8
SUPPORT_TOL = 1e-6
_SLACK_RESOLUTION = 1e-6


@dataclass(frozen=True)
class LinearSystem:
    matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        H = np.array(self.matrix, dtype=float)
        y = np.array(self.rhs, dtype=float).reshape(-1)
        if H.ndim != 2:
            raise ValueError(f"matrix must be 2-D, got shape {H.shape}")
        if H.shape[0] != y.size:
            raise ValueError(f"matrix has {H.shape[0]} rows but rhs has {y.size} entries")
        if not (np.all(np.isfinite(H)) and np.all(np.isfinite(y))):
            raise ValueError("system entries must be finite")
        object.__setattr__(self, "matrix", H)
        object.__setattr__(self, "rhs", y)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


@dataclass(frozen=True)
class SparseSolution:
    s: np.ndarray
    residual_norm: float
    support: np.ndarray
    iterations: int = 0

    @classmethod
    def from_vector(cls, sys: LinearSystem, s: np.ndarray, support_tol: float,
                    iterations: int = 0) -> "SparseSolution":
        resid = float(np.linalg.norm(sys.matrix @ s - sys.rhs))
        support = np.flatnonzero(np.abs(s) > support_tol)
        return cls(s=s, residual_norm=resid, support=support, iterations=iterations)


def _as_system(sys, rhs=None) -> LinearSystem:
    if isinstance(sys, LinearSystem):
        return sys
    return LinearSystem(sys, rhs)


def solve_full_rank(sys: LinearSystem, rank_tol: float | None = None) -> np.ndarray:
    """Least-squares solution of a full-column-rank system.

    Uses an unpivoted Householder QR, so ``|R[j, j]|`` is the distance of
    column ``j`` from the span of the earlier columns. The first column whose
    pivot falls below ``rank_tol`` (default ``max(m, n) * eps * max|R[k, k]|``)
    is reported in :class:`RankDeficientError`.
    """
    sys = _as_system(sys)
    H, y = sys.matrix, sys.rhs
    m, n = H.shape
    if m < n:
        raise RankDeficientError(m, 0.0)
    Q, R = scipy.linalg.qr(H, mode="economic")
    piv = np.abs(np.diag(R))
    if rank_tol is None:
        rank_tol = max(m, n) * np.finfo(float).eps * (piv.max() if n else 0.0)
    bad = np.flatnonzero(piv <= rank_tol)
    if bad.size:
        j = int(bad[0])
        raise RankDeficientError(j, float(piv[j]))
    return scipy.linalg.solve_triangular(R, Q.T @ y)


def basis_pursuit(
    sys: LinearSystem,
    eq_tol: float = EQ_TOL,
    support_tol: float = SUPPORT_TOL,
    max_iter: int | None = None,
) -> SparseSolution:
    """Minimum-L1 solution of ``H s ~= rhs``.

    Solved as the linear program

        min sum(p + q)   s.t.   |H (p - q) - rhs|_i <= tau,  p, q >= 0

    with ``s = p - q``. Each two-sided row bound becomes ``H p - H q - w = rhs - tau``
    and ``w + z = 2 tau`` with ``w, z >= 0``. The per-row slack is
    ``tau = eq_tol / (2 sqrt(m))``, so the returned ``s`` satisfies
    ``||H s - rhs||_2 <= eq_tol`` and noisy right-hand sides stay feasible.
    """
    sys = _as_system(sys)
    H, y = sys.matrix, sys.rhs
    m, n = H.shape
    if max_iter is None:
        max_iter = 10 * (m + n)
    if m == 0 or not np.any(y):
        s = np.zeros(n)
        return SparseSolution.from_vector(sys, s, support_tol)

    tau = eq_tol / (2.0 * math.sqrt(m))
    scale = max(1.0, float(np.abs(y).max()))
    if tau <= _SLACK_RESOLUTION * scale:
        # slack below pivot resolution: the box is numerically an equality
        A = np.hstack([H, -H])
        b = y.copy()
        c = np.ones(2 * n)
    else:
        I = np.eye(m)
        Z = np.zeros((m, m))
        A = np.block([
            [H, -H, -I, Z],
            [np.zeros((m, 2 * n)), I, I],
        ])
        b = np.concatenate([y - tau, np.full(m, 2.0 * tau)])
        c = np.concatenate([np.ones(2 * n), np.zeros(2 * m)])

    res = _simplex.solve_lp(c, A, b, max_iter=max_iter)
    s = res.x[:n] - res.x[n:2 * n]
    out = SparseSolution.from_vector(sys, s, support_tol, iterations=res.iterations)
    if out.residual_norm > eq_tol:
        raise InfeasibleError(
            f"basis pursuit residual {out.residual_norm:.3e} exceeds eq_tol={eq_tol:.1e}"
        )
    return out


def omp(
    sys: LinearSystem,
    sparsity: int,
    eq_tol: float = EQ_TOL,
    support_tol: float = SUPPORT_TOL,
) -> SparseSolution:
    """Orthogonal matching pursuit.

    Each step adds the column with the largest normalised correlation to the
    residual and refits least squares on the chosen support. Stops after
    ``sparsity`` selections or once ``||residual||_2 < eq_tol``.
    """
    sys = _as_system(sys)
    H, y = sys.matrix, sys.rhs
    m, n = H.shape
    if not 1 <= sparsity <= min(m, n):
        raise ValueError(f"sparsity must be in [1, {min(m, n)}], got {sparsity}")

    norms = np.linalg.norm(H, axis=0)
    usable = norms > 0
    scale = np.where(usable, norms, 1.0)

    support: list[int] = []
    coef = np.zeros(0)
    resid = y.copy()
    it = 0
    while len(support) < sparsity and np.linalg.norm(resid) >= eq_tol:
        corr = np.abs(H.T @ resid) / scale
        corr[~usable] = 0.0
        corr[support] = 0.0
        j = int(np.argmax(corr))
        if corr[j] <= 1e-14 * max(1.0, np.linalg.norm(resid)):
            raise DegenerateColumnError(
                f"no remaining column correlates with residual (norm {np.linalg.norm(resid):.3e})"
            )
        support.append(j)
        sub = H[:, support]
        coef, *_ = np.linalg.lstsq(sub, y, rcond=None)
        resid = y - sub @ coef
        it += 1

    s = np.zeros(n)
    if support:
        s[support] = coef
    return SparseSolution.from_vector(sys, s, support_tol, iterations=it)
