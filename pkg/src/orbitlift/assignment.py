"""Deterministic minimal-cost matchings for branch pairing.

Pairings are tiny (a collision involves a handful of branches), so the
optimum is found exhaustively up to size 8 with fully deterministic
tie-breaking; larger problems fall back to scipy's Hungarian solver with a
lexicographic refinement pass.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

_BRUTE_LIMIT = 8


@dataclass(frozen=True)
class AssignmentResult:
    perm: tuple[int, ...]   # row i is assigned to column perm[i]
    cost: float             # primary cost of the chosen assignment
    margin: float           # primary-cost gap to the best differing assignment
    ambiguous: bool         # ties survived the secondary criterion


def minimal_jump_assignment(
    primary: np.ndarray,
    secondary: np.ndarray | None = None,
    tie_tol: float = 1e-6,
) -> AssignmentResult:
    """Assignment minimizing total primary cost.

    Assignments within tie_tol of the optimum are re-ranked by the secondary
    cost; any ties left after that go to the lexicographically smallest
    permutation and are flagged ambiguous.
    """
    cost = np.asarray(primary, dtype=float)
    k = cost.shape[0]
    if cost.shape != (k, k):
        raise ValueError("cost matrix must be square")
    if k == 0:
        return AssignmentResult((), 0.0, float("inf"), False)
    if k <= _BRUTE_LIMIT:
        return _brute_force(cost, secondary, tie_tol)
    rows, cols = linear_sum_assignment(cost)
    best = float(cost[rows, cols].sum())
    perm = _lex_refine(cost, best, tie_tol)
    return AssignmentResult(perm, float(cost[np.arange(k), list(perm)].sum()),
                            float("nan"), False)


def _brute_force(cost, secondary, tie_tol) -> AssignmentResult:
    k = cost.shape[0]
    idx = np.arange(k)
    scored = []
    for perm in itertools.permutations(range(k)):
        scored.append((float(cost[idx, list(perm)].sum()), perm))
    scored.sort(key=lambda s: (s[0], s[1]))
    best_cost = scored[0][0]
    margin = float("inf")
    for c, p in scored[1:]:
        if p != scored[0][1]:
            margin = c - best_cost
            break
    tied = [p for c, p in scored if c <= best_cost + tie_tol]
    if len(tied) == 1 or secondary is None:
        return AssignmentResult(tied[0], best_cost, margin, len(tied) > 1 and secondary is None)
    sec = np.asarray(secondary, dtype=float)
    sec_scored = sorted(
        ((float(sec[idx, list(p)].sum()), p) for p in tied), key=lambda s: (s[0], s[1])
    )
    sec_best = sec_scored[0][0]
    sec_tied = [p for c, p in sec_scored if c <= sec_best + 1e-12 * (1.0 + abs(sec_best))]
    return AssignmentResult(sec_tied[0], best_cost, margin, len(sec_tied) > 1)


def _lex_refine(cost, best, tie_tol) -> tuple[int, ...]:
    """Lexicographically smallest assignment whose cost is within tie_tol of best."""
    k = cost.shape[0]
    fixed: list[int] = []
    free_cols = list(range(k))
    for i in range(k):
        for c in sorted(free_cols):
            trial_fixed = fixed + [c]
            rest_rows = list(range(i + 1, k))
            rest_cols = [x for x in free_cols if x != c]
            if rest_rows:
                sub = cost[np.ix_(rest_rows, rest_cols)]
                rr, cc = linear_sum_assignment(sub)
                rest_cost = float(sub[rr, cc].sum())
            else:
                rest_cost = 0.0
            fixed_cost = sum(cost[j, trial_fixed[j]] for j in range(i + 1))
            if fixed_cost + rest_cost <= best + tie_tol:
                fixed = trial_fixed
                free_cols = rest_cols
                break
    return tuple(fixed)
