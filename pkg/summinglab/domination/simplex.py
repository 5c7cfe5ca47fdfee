"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves   minimize c @ x   subject to   A @ x <= b,  x >= 0.
"""

from __future__ import annotations

from enum import Enum
from typing import NamedTuple

import numpy as np
import numpy.typing as npt

from ..errors import InputError, NumericalError
from ..utils import log_debug

__all__ = ['LPStatus', 'LPSolution', 'lp_min']

PIVOT_TOL = 1e-9
MAX_PIVOTS = 50_000


class LPStatus(str, Enum):
    OPTIMAL = 'optimal'
    INFEASIBLE = 'infeasible'
    UNBOUNDED = 'unbounded'


class LPSolution(NamedTuple):
    status: LPStatus
    x: np.ndarray | None
    objective: float | None


class _Tableau:
    """Constraint rows in canonical form with respect to `basis`; last column is the rhs."""

    def __init__(self, rows: np.ndarray, basis: list[int]):
        self.T = rows
        self.basis = basis

    def pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row] /= T[row, col]
        factors = T[:, col].copy()
        factors[row] = 0.0
        T -= np.outer(factors, T[row])
        self.basis[row] = col

    def reduced_costs(self, cost: np.ndarray) -> np.ndarray:
        return cost - cost[self.basis] @ self.T[:, :-1]

    def solve(self, cost: np.ndarray, allowed: int) -> LPStatus:
        """Minimize cost over columns [0, allowed) by Bland's rule."""
        for _ in range(MAX_PIVOTS):
            d = self.reduced_costs(cost)[:allowed]
            entering = np.flatnonzero(d < -PIVOT_TOL)
            if entering.size == 0:
                return LPStatus.OPTIMAL
            col = int(entering[0])
            column = self.T[:, col]
            candidates = np.flatnonzero(column > PIVOT_TOL)
            if candidates.size == 0:
                return LPStatus.UNBOUNDED
            ratios = self.T[candidates, -1] / column[candidates]
            best = ratios.min()
            ties = candidates[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
            row = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(row, col)
        raise NumericalError(f'Simplex did not terminate in {MAX_PIVOTS} pivots')

    def value(self, cost: np.ndarray) -> float:
        return float(cost[self.basis] @ self.T[:, -1])


def lp_min(c: npt.ArrayLike, A: npt.ArrayLike, b: npt.ArrayLike) -> LPSolution:
    """minimize c @ x subject to A @ x <= b and x >= 0."""
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    A = np.asarray(A, dtype=float).reshape(-1, n)
    b = np.asarray(b, dtype=float).ravel()
    m = A.shape[0]
    if b.size != m:
        raise InputError(f'{m} constraint rows but {b.size} bounds')
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
        raise InputError('LP data must be finite')

    negative = b < 0
    n_art = int(negative.sum())
    width = n + m + n_art
    rows = np.zeros((m, width + 1))
    rows[:, :n] = A
    rows[:, n : n + m] = np.eye(m)
    rows[:, -1] = b
    rows[negative] *= -1.0
    basis = []
    art = n + m
    for i in range(m):
        if negative[i]:
            rows[i, art] = 1.0
            basis.append(art)
            art += 1
        else:
            basis.append(n + i)
    tab = _Tableau(rows, basis)
    log_debug(f'lp_min: {m} rows, {n} columns, {n_art} artificials')

    if n_art:
        phase_one = np.zeros(width)
        phase_one[n + m :] = 1.0
        tab.solve(phase_one, width)
        if tab.value(phase_one) > PIVOT_TOL * max(1.0, float(np.abs(b).max())):
            return LPSolution(LPStatus.INFEASIBLE, None, None)
        # Drive remaining (zero-level) artificials out, dropping redundant rows.
        keep = []
        for i in range(len(tab.basis)):
            if tab.basis[i] < n + m:
                keep.append(i)
                continue
            cols = np.flatnonzero(np.abs(tab.T[i, : n + m]) > PIVOT_TOL)
            if cols.size:
                tab.pivot(i, int(cols[0]))
                keep.append(i)
        tab = _Tableau(
            np.hstack([tab.T[keep, : n + m], tab.T[keep, -1:]]), [tab.basis[i] for i in keep]
        )

    cost = np.zeros(n + m)
    cost[:n] = c
    if tab.solve(cost, n + m) is LPStatus.UNBOUNDED:
        return LPSolution(LPStatus.UNBOUNDED, None, None)
    full = np.zeros(n + m)
    full[tab.basis] = tab.T[:, -1]
    x = np.clip(full[:n], 0.0, None)
    return LPSolution(LPStatus.OPTIMAL, x, float(c @ x))
