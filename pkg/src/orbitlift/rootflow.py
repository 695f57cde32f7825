"""Continuous and differentiable root-branch selections along a curve.

The sorted selection is the pointwise nondecreasing labelling of the roots;
it is continuous but kinks where branches cross.  The differentiable
selection re-pairs branch labels across each collision cluster so that
one-sided slopes match: slopes are estimated by least squares just outside
the cluster, the label bijection minimizes the total slope jump (min-cost
matching, lexicographic tie-break), and slope estimates must stabilize
under window refinement before a pairing is accepted.  Clusters whose
pairing stays ambiguous at maximal refinement fall back to sorted labels
inside the window and are flagged as unresolved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hyperpoly
from .assignment import minimal_jump_assignment
from .curvedsl import CoeffCurve, Grid
from .errors import NotHyperbolic, NotHyperbolicAt

SORTED = "sorted"
DIFFERENTIABLE = "differentiable"

_SIDE_WINDOW = 8          # samples fitted on each side of a cluster
_SLOPE_RTOL = 1e-3        # relative slope drift accepted as stable
_MAX_LEVEL = 20           # refinement stops at this grid level
_TIE_TOL = 1e-6           # slope-cost tie width triggering second-order costs
_EPS_FACTOR = 1e-3        # clustering threshold = root range * this


@dataclass(frozen=True)
class CollisionCluster:
    """Maximal time window where adjacent involved branches stay within eps."""

    window: tuple[float, float]
    index_range: tuple[int, int]  # inclusive sample indices
    branches: tuple[int, ...]     # involved sorted-branch indices (contiguous)
    min_gap: float


@dataclass(frozen=True)
class RootBranches:
    grid: Grid
    branches: np.ndarray  # (n, N); row j is branch j sampled over the grid
    selection_kind: str
    swap_log: tuple[tuple[int, tuple[int, ...]], ...] = ()
    unresolved: tuple[tuple[float, float], ...] = ()

    @property
    def n(self) -> int:
        return self.branches.shape[0]


def sorted_branches(curve: CoeffCurve, grid: Grid, tol: float = 1e-10) -> RootBranches:
    """Pointwise sorted roots of the curve; raises NotHyperbolicAt(t)."""
    vals = _sorted_matrix(curve, grid, tol)
    return RootBranches(grid, vals, SORTED)


def _sorted_matrix(curve: CoeffCurve, grid: Grid, tol: float) -> np.ndarray:
    pts = grid.points
    rows = curve.evaluate(pts)
    n = curve.n
    vals = np.empty((n, pts.size))
    for i, t in enumerate(pts):
        try:
            vals[:, i] = hyperpoly.roots(hyperpoly.MonicHyperbolic(rows[i]), tol).values
        except NotHyperbolic:
            raise NotHyperbolicAt(float(t)) from None
    return vals


def collision_clusters(b: RootBranches, eps: float) -> list[CollisionCluster]:
    """Disjoint clusters of near-colliding adjacent branches (gap < eps)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if b.selection_kind != SORTED:
        raise ValueError("collision clustering expects a sorted selection")
    vals = b.branches
    n, N = vals.shape
    if n < 2:
        return []
    gaps = vals[1:] - vals[:-1]          # (n-1, N)
    small = gaps < eps
    any_small = small.any(axis=0)
    clusters: list[CollisionCluster] = []
    t = b.grid.points
    i = 0
    while i < N:
        if not any_small[i]:
            i += 1
            continue
        j = i
        while j + 1 < N and any_small[j + 1]:
            j += 1
        # connected chains of adjacent-branch contacts within the run
        run_small = small[:, i : j + 1].any(axis=1)
        k = 0
        while k < n - 1:
            if not run_small[k]:
                k += 1
                continue
            k2 = k
            while k2 + 1 < n - 1 and run_small[k2 + 1]:
                k2 += 1
            members = tuple(range(k, k2 + 2))
            chain_gaps = gaps[k : k2 + 1, i : j + 1]
            clusters.append(
                CollisionCluster(
                    window=(float(t[i]), float(t[j])),
                    index_range=(i, j),
                    branches=members,
                    min_gap=float(chain_gaps.min()),
                )
            )
            k = k2 + 1
        i = j + 1
    return clusters


@dataclass(frozen=True)
class _SideSlopes:
    left_slope: np.ndarray
    left_quad: np.ndarray
    right_slope: np.ndarray
    right_quad: np.ndarray
    run_window: tuple[float, float]


def _fit_side(tc: np.ndarray, vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Linear-fit slopes and quadratic-fit curvature coefficients, per branch."""
    slopes = np.empty(vals.shape[0])
    quads = np.empty(vals.shape[0])
    for j in range(vals.shape[0]):
        slopes[j] = np.polyfit(tc, vals[j], 1)[0]
        quads[j] = np.polyfit(tc, vals[j], 2)[0] if tc.size >= 3 else 0.0
    return slopes, quads


def _estimate_slopes(
    pts: np.ndarray,
    vals: np.ndarray,
    members: tuple[int, ...],
    eps: float,
    center_t: float,
    w: int,
) -> _SideSlopes | None:
    sub = vals[list(members)]
    gaps = sub[1:] - sub[:-1]
    small = (gaps < eps).any(axis=0)
    center_i = int(np.argmin(np.abs(pts - center_t)))
    if not small.any():
        lo = hi = center_i
    else:
        if not small[center_i]:
            candidates = np.nonzero(small)[0]
            center_i = int(candidates[np.argmin(np.abs(pts[candidates] - center_t))])
        lo = hi = center_i
        while lo - 1 >= 0 and small[lo - 1]:
            lo -= 1
        while hi + 1 < pts.size and small[hi + 1]:
            hi += 1
    left = slice(max(lo - w, 0), lo)
    right = slice(hi + 1, min(hi + 1 + w, pts.size))
    if left.stop - left.start < 2 or right.stop - right.start < 2:
        return None
    ls, lq = _fit_side(pts[left] - center_t, sub[:, left])
    rs, rq = _fit_side(pts[right] - center_t, sub[:, right])
    return _SideSlopes(ls, lq, rs, rq, (float(pts[lo]), float(pts[hi])))


def _slope_drift(a: _SideSlopes, b: _SideSlopes) -> float:
    drift = 0.0
    for x, y in ((a.left_slope, b.left_slope), (a.right_slope, b.right_slope)):
        scale = 1.0 + np.maximum(np.abs(x), np.abs(y))
        drift = max(drift, float(np.max(np.abs(x - y) / scale)))
    return drift


def _pairing(est: _SideSlopes, tie_tol: float):
    primary = np.abs(est.left_slope[:, None] - est.right_slope[None, :])
    secondary = np.abs(est.left_quad[:, None] - est.right_quad[None, :])
    return minimal_jump_assignment(primary, secondary, tie_tol)


def _resolve_cluster(
    curve: CoeffCurve,
    grid: Grid,
    vals: np.ndarray,
    cl: CollisionCluster,
    tol: float,
    eps: float,
):
    """Stable slope-matched pairing for one cluster, or None if unresolved."""
    i0, i1 = cl.index_range
    pts = grid.points
    center_t = 0.5 * (cl.window[0] + cl.window[1])
    w = _SIDE_WINDOW
    est = _estimate_slopes(pts, vals, cl.branches, eps, center_t, w)
    if est is None:
        return None
    sub = grid
    window = (
        max(grid.t0, pts[max(i0 - w - 1, 0)]),
        min(grid.t1, pts[min(i1 + w + 1, pts.size - 1)]),
    )
    prev_drift = float("inf")
    while sub.level < _MAX_LEVEL:
        sub = sub.refine(window)
        sub_vals = _sorted_matrix(curve, sub, tol)
        new_est = _estimate_slopes(sub.points, sub_vals, cl.branches, eps, center_t, w)
        if new_est is None:
            return None
        drift = _slope_drift(est, new_est)
        pairing = _pairing(new_est, _TIE_TOL)
        if drift <= _SLOPE_RTOL:
            return None if pairing.ambiguous else pairing
        # Slope values still drifting (branches meet with vanishing or
        # diverging derivatives).  Accept the pairing anyway when it repeats
        # across refinements, its cost margin dwarfs the drift, and the drift
        # itself is shrinking; diverging slopes (no one-sided derivative)
        # keep a constant relative drift and stay unresolved.
        prev_pairing = _pairing(est, _TIE_TOL)
        slope_scale = 1.0 + float(np.max(np.abs(new_est.left_slope)))
        if (
            pairing.perm == prev_pairing.perm
            and not pairing.ambiguous
            and pairing.margin > 10.0 * drift * slope_scale
            and np.isfinite(prev_drift)
            and drift < 0.9 * prev_drift
        ):
            return pairing
        prev_drift = drift
        est = new_est
        half = (w + 2) * sub.step * 0.5
        window = (
            max(sub.t0, new_est.run_window[0] - half),
            min(sub.t1, new_est.run_window[1] + half),
        )
    return None


def differentiable_selection(
    curve: CoeffCurve,
    grid: Grid,
    tol: float = 1e-10,
    eps: float | None = None,
) -> RootBranches:
    """Root selection with branch labels re-paired across collisions.

    Away from clusters this agrees with sorted_branches; at each resolved
    cluster the labels are re-paired by the minimal-slope-jump matching and
    interior samples follow the entry-to-exit chord.  The multiset of branch
    values matches the polynomial roots at every grid point by construction.
    """
    sb = sorted_branches(curve, grid, tol)
    vals = sb.branches
    n, N = vals.shape
    if n < 2:
        return RootBranches(grid, vals.copy(), DIFFERENTIABLE)
    value_range = float(vals.max() - vals.min())
    if eps is None:
        eps = _EPS_FACTOR * value_range if value_range > 0 else max(tol, 1e-12)
    perm_eps = 1e-9 * max(1.0, value_range)
    clusters = collision_clusters(sb, eps)
    out = vals.copy()
    cur = np.arange(n)
    swaps: list[tuple[int, tuple[int, ...]]] = []
    unresolved: list[tuple[float, float]] = []
    tpts = grid.points
    for cl in clusters:
        i0, i1 = cl.index_range
        members = list(cl.branches)
        if i0 == 0 or i1 == N - 1:
            continue  # one-sided window at the domain end: keep sorted labels
        # permanent-collision test must look beyond the window itself: a
        # transversal crossing can collide exactly at one sample
        lo, hi = max(i0 - _SIDE_WINDOW, 0), min(i1 + _SIDE_WINDOW, N - 1)
        spread = vals[members, lo : hi + 1]
        diameter = float(np.max(spread.max(axis=0) - spread.min(axis=0)))
        if diameter < perm_eps:
            continue  # permanent collision: any pairing is equivalent
        pairing = _resolve_cluster(curve, grid, vals, cl, tol, eps)
        if pairing is None:
            unresolved.append(cl.window)
            continue
        mapping = {members[a]: members[b] for a, b in enumerate(pairing.perm)}
        if all(k == v for k, v in mapping.items()):
            continue
        affected = [j for j in range(n) if cur[j] in mapping]
        entry_t, exit_t = tpts[i0 - 1], tpts[i1 + 1]
        entry_vals = {j: vals[cur[j], i0 - 1] for j in affected}
        exit_vals = {j: vals[mapping[cur[j]], i1 + 1] for j in affected}
        for i in range(i0, i1 + 1):
            frac = (tpts[i] - entry_t) / (exit_t - entry_t)
            preds = np.array(
                [entry_vals[j] + (exit_vals[j] - entry_vals[j]) * frac for j in affected]
            )
            avail = vals[members, i]
            chord = minimal_jump_assignment(np.abs(preds[:, None] - avail[None, :]))
            for a, j in enumerate(affected):
                out[j, i] = avail[chord.perm[a]]
        full = np.arange(n)
        for k, v in mapping.items():
            full[k] = v
        swaps.append((i0, tuple(int(x) for x in full)))
        for j in affected:
            cur[j] = mapping[cur[j]]
            out[j, i1 + 1 :] = vals[cur[j], i1 + 1 :]
    return RootBranches(grid, out, DIFFERENTIABLE, tuple(swaps), tuple(unresolved))
