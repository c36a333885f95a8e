"""Dense simplex kernel for best responses over a simplex and zero-sum values (dual tableau, Bland's rule)."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Tuple

import numpy as np

from .exceptions import LPError

logger = logging.getLogger(__name__)

PIVOT_TOLERANCE = 1e-10
ACTIVE_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class SimplexMaxMinProblem:
    """Rows are the k linear objectives g_1..g_k over m pure strategies."""

    gains: np.ndarray

    def __post_init__(self) -> None:
        gains = np.array(self.gains, dtype=float)
        if gains.ndim == 1:
            gains = gains.reshape(1, -1)
        if gains.ndim != 2 or gains.shape[0] < 1 or gains.shape[1] < 1:
            raise LPError(f"gains must be a non-empty k x m matrix, got shape {gains.shape}")
        if not np.all(np.isfinite(gains)):
            raise LPError("gains must be finite")
        gains.setflags(write=False)
        object.__setattr__(self, "gains", gains)


@dataclass(frozen=True, eq=False)
class LpSolution:
    x: np.ndarray
    value: float
    active_set: Tuple[int, ...]
    pivots: int = 0


class ZeroSumSolution(NamedTuple):
    value: float
    row_strategy: np.ndarray
    col_strategy: np.ndarray


def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])


def _bland(gains: np.ndarray) -> Tuple[np.ndarray, int]:
    """Run the dual tableau on positive gains; return (y, pivots)."""
    k, m = gains.shape
    n_cols = k + m
    # rows 0..m-1: constraints  sum_j G'[j, i] z_j + s_i = 1; last row: objective
    tableau = np.zeros((m + 1, n_cols + 1))
    tableau[:m, :k] = gains.T
    tableau[:m, k:n_cols] = np.eye(m)
    tableau[:m, -1] = 1.0
    tableau[m, :k] = -1.0
    basis = list(range(k, n_cols))

    pivots = 0
    limit = 50 * (n_cols + 1) ** 2
    while True:
        candidates = np.nonzero(tableau[m, :n_cols] < -PIVOT_TOLERANCE)[0]
        if candidates.size == 0:
            break
        col = int(candidates[0])
        column = tableau[:m, col]
        rows = np.nonzero(column > PIVOT_TOLERANCE)[0]
        if rows.size == 0:  # pragma: no cover - the feasible region is bounded
            raise LPError("unbounded tableau")
        ratios = tableau[rows, -1] / column[rows]
        best = ratios.min()
        tied = rows[ratios <= best + PIVOT_TOLERANCE * max(1.0, abs(best))]
        row = int(min(tied, key=lambda r: basis[r]))
        _pivot(tableau, row, col)
        basis[row] = col
        pivots += 1
        if pivots > limit:  # pragma: no cover - Bland's rule terminates
            raise LPError("simplex iteration limit exceeded")

    y = np.clip(tableau[m, k:n_cols], 0.0, None)
    return y, pivots


def solve_simplex_maxmin(prob: SimplexMaxMinProblem | Sequence[Sequence[float]]) -> LpSolution:
    """Global maximizer of min_j g_j . x over the probability simplex."""
    if not isinstance(prob, SimplexMaxMinProblem):
        prob = SimplexMaxMinProblem(np.asarray(prob, dtype=float))
    gains = prob.gains
    k, m = gains.shape

    if k == 1:
        # A linear objective peaks at its first maximal vertex, as Bland's rule would reach.
        x = np.zeros(m)
        x[int(np.argmax(gains[0]))] = 1.0
        pivots = 0
    else:
        scale = float(np.max(np.abs(gains)))
        normalized = gains / scale if scale > 0 else gains
        y, pivots = _bland(normalized + 2.0)
        total = y.sum()
        if total <= 0:  # pragma: no cover - positive gains give a positive optimum
            raise LPError("degenerate simplex solution")
        x = y / total

    values = gains @ x
    value = float(values.min())
    active = tuple(int(j) for j in np.nonzero(values <= value + ACTIVE_TOLERANCE)[0])
    logger.debug("simplex max-min k=%d m=%d value=%.12g pivots=%d", k, m, value, pivots)
    return LpSolution(x=x, value=value, active_set=active, pivots=pivots)


def solve_zero_sum(matrix: Sequence[Sequence[float]]) -> ZeroSumSolution:
    """Value and optimal strategies of the matrix game where the row player maximizes."""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise LPError(f"payoff matrix must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise LPError("payoff matrix must be finite")
    # Row guarantees min_j (A^T x)_j; column guarantees min_i (-A y)_i.
    row = solve_simplex_maxmin(SimplexMaxMinProblem(a.T))
    col = solve_simplex_maxmin(SimplexMaxMinProblem(-a))
    return ZeroSumSolution(value=row.value, row_strategy=row.x, col_strategy=col.x)
