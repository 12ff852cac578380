"""Dense two-phase tableau simplex with anti-cycling pivot rules.

Solves ``min c @ x  s.t.  A @ x = b, x >= 0``. Small enough to audit, fast
enough for a few thousand columns because each pivot is one rank-1 update of
the tableau.

Two rules are available:

* ``"lex"`` (default): Dantzig's most-negative reduced cost picks the entering
  column; ties in the ratio test are broken lexicographically on the rows of
  ``B^-1``. No basis can repeat, so it terminates.
* ``"bland"``: lowest-index entering column and lowest-index leaving variable.
  Also terminates but can take tens of thousands of degenerate pivots on the
  0/1 sensing matrices used by the attacks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import blas

from .errors import InfeasibleError, NonConvergenceError

PIVOT_TOL = 1e-9
RULES = ("lex", "bland")


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    basis: np.ndarray
    iterations: int


def _rank1_update(T: np.ndarray, col: np.ndarray, row: np.ndarray) -> None:
    """In-place ``T -= outer(col, row)``."""
    if T.flags.f_contiguous:
        blas.dger(-1.0, col, row, a=T, overwrite_a=True)
    else:
        T -= np.outer(col, row)


class _Tableau:
    """Rows ``0..m-1`` are constraints, the last row holds reduced costs.

    ``inv_cols`` are the columns that formed the identity at the start, so
    ``T[:m, inv_cols]`` is ``B^-1`` for the current basis.
    """

    def __init__(self, T: np.ndarray, basis: np.ndarray, inv_cols: np.ndarray):
        self.T = T
        self.basis = basis
        self.inv_cols = inv_cols
        self.iterations = 0

    def pivot(self, r: int, e: int) -> None:
        T = self.T
        T[r] /= T[r, e]
        col = T[:, e].copy()
        col[r] = 0.0
        _rank1_update(T, col, T[r].copy())
        T[:, e] = 0.0
        T[r, e] = 1.0
        rhs = T[:-1, -1]
        rhs[rhs < 0.0] = 0.0  # round-off only; exact values are >= 0
        self.basis[r] = e

    def _lex_row(self, ties: np.ndarray, e: int, tol: float) -> int:
        piv = self.T[ties, e]
        for c in self.inv_cols:
            if ties.size == 1:
                break
            vals = self.T[ties, c] / piv
            keep = vals <= vals.min() + tol
            ties, piv = ties[keep], piv[keep]
        return int(ties[np.argmin(self.basis[ties])])

    def run(self, allowed: int, max_iter: int, tol: float, rule: str = "lex") -> None:
        """Pivot until optimal; only columns ``< allowed`` may enter."""
        T = self.T
        m = T.shape[0] - 1
        while True:
            d = T[m, :allowed]
            neg = np.flatnonzero(d < -tol)
            if neg.size == 0:
                return
            if self.iterations >= max_iter:
                raise NonConvergenceError(f"simplex did not converge in {max_iter} pivots")
            e = int(neg[0]) if rule == "bland" else int(neg[np.argmin(d[neg])])
            col = T[:m, e]
            rows = np.flatnonzero(col > tol)
            if rows.size == 0:
                raise NonConvergenceError(f"LP is unbounded along column {e}")
            ratios = T[rows, -1] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + tol * max(1.0, abs(best))]
            if ties.size == 1:
                r = int(ties[0])
            elif rule == "bland":
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = self._lex_row(ties, e, tol)
            self.pivot(r, e)
            self.iterations += 1


def _crash_basis(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pick unit columns already present in ``A`` as initial basics (-1 = none)."""
    m = A.shape[0]
    basis = np.full(m, -1)
    nnz = np.count_nonzero(A, axis=0)
    for j in np.flatnonzero(nnz == 1):
        i = int(np.flatnonzero(A[:, j])[0])
        if basis[i] < 0 and A[i, j] == 1.0 and b[i] >= 0.0:
            basis[i] = j
    return basis


def solve_lp(
    c: np.ndarray,
    A: np.ndarray,
    b: np.ndarray,
    max_iter: int,
    tol: float = PIVOT_TOL,
    feas_tol: float = 1e-9,
    rule: str = "lex",
) -> LPResult:
    if rule not in RULES:
        raise ValueError(f"unknown pivot rule {rule!r}; expected one of {RULES}")
    c = np.asarray(c, dtype=float)
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m, N = A.shape

    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    basis = _crash_basis(A, b)
    need = np.flatnonzero(basis < 0)
    k = need.size
    # artificial columns stay in the tableau (never re-entering) to track B^-1
    T = np.zeros((m + 1, N + k + 1), order="F")
    T[:m, :N] = A
    T[:m, -1] = b
    for t, i in enumerate(need):
        T[i, N + t] = 1.0
        basis[i] = N + t

    tab = _Tableau(T, basis, basis.copy())
    keep = np.ones(m, dtype=bool)

    # phase 1: minimise the sum of artificials
    if k:
        T[m, :N] = -A[need].sum(axis=0)
        T[m, -1] = -b[need].sum()
        tab.run(N, max_iter, tol, rule)
        if -T[m, -1] > feas_tol * max(1.0, np.abs(b).max()):
            raise InfeasibleError(f"constraints infeasible (phase-1 residual {-T[m, -1]:.3e})")
        # drive zero-level artificials out of the basis; drop redundant rows
        for i in range(m):
            if tab.basis[i] >= N:
                cand = np.flatnonzero(np.abs(T[i, :N]) > tol)
                if cand.size:
                    tab.pivot(i, int(cand[0]))
                else:
                    keep[i] = False
        if not keep.all():
            T = np.asfortranarray(T[np.append(keep, True)])
            tab = _Tableau(T, tab.basis[keep].copy(), tab.inv_cols[keep])
        tab.iterations = 0
        m = T.shape[0] - 1

    # phase 2
    T = tab.T
    cb = c[tab.basis]
    T[m, :N] = c - cb @ T[:m, :N]
    T[m, N:-1] = 0.0
    T[m, -1] = -cb @ T[:m, -1]
    tab.run(N, max_iter, tol, rule)

    x = np.zeros(N)
    x[tab.basis] = T[:m, -1]
    # refine basic values against the original (sign-normalised) system
    try:
        xb = np.linalg.solve(A[keep][:, tab.basis], b[keep])
        if np.all(xb >= -feas_tol):
            x[tab.basis] = np.maximum(xb, 0.0)
    except np.linalg.LinAlgError:
        pass
    x[x < 0.0] = 0.0
    return LPResult(x=x, objective=float(c @ x), basis=tab.basis.copy(), iterations=tab.iterations)
