"""Lift orbit-space curves through the invariant map, with certified regularity.

A lift is a curve in V whose sigma-image reproduces the input curve.  Each
grid sample contributes its fiber (one group orbit); the lift threads one
point per fiber.  Away from collisions the thread follows linear
extrapolation matched to the nearest fiber point.  Where fiber points
collide or the fiber cardinality jumps (orbit-type change), the thread is
re-attached by the minimal-derivative-jump principle: one-sided slopes are
estimated just outside the window, candidates are ranked by their distance
from the linear continuation of the incoming strand (slope jump and
curvature as tie-breakers), estimates must stabilize under window
refinement, and windows that stay ambiguous are flagged unresolved with a
nearest-point fallback inside.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import regcheck
from .curvedsl import CoeffCurve, Grid
from .errors import DimensionMismatch, NotInImageAt
from .invariants import OrbitMapSigma, ReflectionGroup, fiber
from .regcheck import VERDICT_RANK, RegularityReport

_SIDE_WINDOW = 8
_SLOPE_RTOL = 1e-3
_MAX_LEVEL = 20
_TIE_TOL = 1e-6
_EPS_FACTOR = 1e-3


@dataclass(frozen=True)
class LiftResult:
    grid: Grid
    group: ReflectionGroup
    values: np.ndarray  # (N, dim)
    residual: float     # sup |sigma(lift) - c| over the grid
    reports: tuple[RegularityReport, ...]  # one per coordinate of V
    swap_log: tuple[tuple[int, tuple[int, int]], ...]  # (index, (rank in, rank out))
    unresolved: tuple[tuple[float, float], ...]
    max_step: float
    continuity_bound: float

    @property
    def continuity_ok(self) -> bool:
        return self.max_step <= self.continuity_bound

    def min_verdict(self) -> str:
        return min((r.verdict for r in self.reports), key=lambda v: VERDICT_RANK[v])


def verify_lift(map_: OrbitMapSigma, lift: LiftResult, curve: CoeffCurve) -> float:
    """sup_t |sigma(lift(t)) - c(t)|; a valid lift stays below 10*tol."""
    target = curve.evaluate(lift.grid.points)
    worst = 0.0
    for i in range(lift.values.shape[0]):
        worst = max(worst, float(np.max(np.abs(map_.evaluate(lift.values[i]) - target[i]))))
    return worst


def _fibers_at(map_: OrbitMapSigma, rows: np.ndarray, tpts: np.ndarray, tol: float):
    out = []
    for i in range(rows.shape[0]):
        pts = fiber(map_, rows[i], tol)
        if not pts:
            raise NotInImageAt(float(tpts[i]))
        out.append(np.asarray(pts))
    return out


def _min_pairwise(f: np.ndarray) -> float:
    if f.shape[0] < 2:
        return np.inf
    d = np.linalg.norm(f[:, None, :] - f[None, :, :], axis=2)
    return float(np.min(d[np.triu_indices(f.shape[0], 1)]))


def _nearest(f: np.ndarray, p: np.ndarray) -> int:
    return int(np.argmin(np.linalg.norm(f - p[None, :], axis=1)))


def _track(fibers, start: np.ndarray | None = None) -> np.ndarray:
    """Nearest-point tracking with linear extrapolation."""
    n = len(fibers)
    dim = fibers[0].shape[1]
    vals = np.empty((n, dim))
    vals[0] = fibers[0][0] if start is None else fibers[0][_nearest(fibers[0], start)]
    for i in range(1, n):
        pred = vals[i - 1] if i == 1 else 2.0 * vals[i - 1] - vals[i - 2]
        vals[i] = fibers[i][_nearest(fibers[i], pred)]
    return vals


def _fit_vector_side(tc: np.ndarray, vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-coordinate linear slope and quadratic coefficient of a strand."""
    dim = vals.shape[1]
    slope = np.empty(dim)
    quad = np.empty(dim)
    for j in range(dim):
        slope[j] = np.polyfit(tc, vals[:, j], 1)[0]
        quad[j] = np.polyfit(tc, vals[:, j], 2)[0] if tc.size >= 3 else 0.0
    return slope, quad


@dataclass
class _WindowEstimate:
    left_slope: np.ndarray
    left_quad: np.ndarray
    left_last: np.ndarray    # tracked position at the last sample before the window
    left_last_t: float
    exit_t: float
    cand_slopes: np.ndarray  # (k, dim)
    cand_quads: np.ndarray
    candidates: np.ndarray   # (k, dim) fiber points right after the window


def _estimate_window(map_, curve, sub: Grid, tol, eps, center_t, left_anchor, w):
    tpts = sub.points
    rows = curve.evaluate(tpts)
    fibers = _fibers_at(map_, rows, tpts, tol)
    risky = np.array(
        [_min_pairwise(f) < eps or
         (0 < i and len(fibers[i]) != len(fibers[i - 1])) or
         (i + 1 < len(fibers) and len(fibers[i]) != len(fibers[i + 1]))
         for i, f in enumerate(fibers)]
    )
    center_i = int(np.argmin(np.abs(tpts - center_t)))
    if risky.any():
        if not risky[center_i]:
            cand = np.nonzero(risky)[0]
            center_i = int(cand[np.argmin(np.abs(tpts[cand] - center_t))])
        lo = hi = center_i
        while lo - 1 >= 0 and risky[lo - 1]:
            lo -= 1
        while hi + 1 < tpts.size and risky[hi + 1]:
            hi += 1
    else:
        lo = hi = center_i
    if lo - w < 0 or hi + 1 + 2 >= tpts.size:
        return None
    left_vals = _track(fibers[max(lo - w, 0) : lo], start=left_anchor)
    if left_vals.shape[0] < 2:
        return None
    tc_left = tpts[max(lo - w, 0) : lo] - center_t
    ls, lq = _fit_vector_side(tc_left, left_vals)
    cands = fibers[hi + 1]
    fwd = min(w, tpts.size - (hi + 1))
    cs = np.empty((cands.shape[0], cands.shape[1]))
    cq = np.empty_like(cs)
    for k in range(cands.shape[0]):
        strand = _track(fibers[hi + 1 : hi + 1 + fwd], start=cands[k])
        tc_right = tpts[hi + 1 : hi + 1 + fwd] - center_t
        if strand.shape[0] < 2:
            return None
        cs[k], cq[k] = _fit_vector_side(tc_right, strand)
    est = _WindowEstimate(
        ls, lq, left_vals[-1], float(tpts[lo - 1]), float(tpts[hi + 1]), cs, cq, cands
    )
    return est, (float(tpts[lo]), float(tpts[hi]))


def _choose_candidate(est: _WindowEstimate):
    """Candidate index, cost margin (slope units), ambiguity flag.

    Primary cost: deviation of the candidate from the linear continuation of
    the incoming strand, normalized by the time gap so the unit matches the
    slope-jump tie-breakers used at collision points."""
    dt = est.exit_t - est.left_last_t
    predicted = est.left_last[None, :] + dt * est.left_slope[None, :]
    cost = np.linalg.norm(est.candidates - predicted, axis=1) / dt
    order = np.argsort(cost, kind="stable")
    best = int(order[0])
    margin = float(cost[order[1]] - cost[order[0]]) if order.size > 1 else np.inf
    if margin > _TIE_TOL:
        return best, margin, False
    tied = [int(i) for i in order if cost[i] <= cost[best] + _TIE_TOL]
    scost = np.linalg.norm(est.cand_slopes - est.left_slope[None, :], axis=1)
    qcost = np.linalg.norm(est.cand_quads - est.left_quad[None, :], axis=1)
    tied.sort(key=lambda i: (scost[i], qcost[i], i))
    first, second = tied[0], tied[1] if len(tied) > 1 else None
    margin = float(scost[second] - scost[first]) if second is not None else margin
    ambiguous = (
        second is not None
        and scost[second] <= scost[first] + _TIE_TOL
        and qcost[second] <= qcost[first] + 1e-12 * (1 + qcost[first])
    )
    return first, margin, ambiguous


def _slope_drift_vec(a: _WindowEstimate, b: _WindowEstimate) -> float:
    scale = 1.0 + max(float(np.max(np.abs(a.left_slope))), float(np.max(np.abs(b.left_slope))))
    drift = float(np.max(np.abs(a.left_slope - b.left_slope))) / scale
    if a.cand_slopes.shape == b.cand_slopes.shape:
        drift = max(drift, float(np.max(np.abs(a.cand_slopes - b.cand_slopes))) / scale)
    return drift


def _resolve_window(map_, curve, grid, tol, eps, i0, i1, left_anchor, w):
    tpts = grid.points
    center_t = 0.5 * (tpts[i0] + tpts[i1])
    base = _estimate_window(map_, curve, grid, tol, eps, center_t, left_anchor, w)
    if base is None:
        return None
    est, run = base
    window = (
        max(grid.t0, tpts[max(i0 - w - 1, 0)]),
        min(grid.t1, tpts[min(i1 + w + 1, tpts.size - 1)]),
    )
    sub = grid
    prev_drift = np.inf
    while sub.level < _MAX_LEVEL:
        sub = sub.refine(window)
        nxt = _estimate_window(map_, curve, sub, tol, eps, center_t, left_anchor, w)
        if nxt is None:
            return None
        new_est, run = nxt
        drift = _slope_drift_vec(est, new_est)
        choice, margin, ambiguous = _choose_candidate(new_est)
        if drift <= _SLOPE_RTOL:
            return None if ambiguous else new_est.candidates[choice]
        prev_choice, _, prev_amb = _choose_candidate(est)
        same = (
            est.candidates.shape == new_est.candidates.shape
            and choice == prev_choice
            and not ambiguous
            and not prev_amb
        )
        slope_scale = 1.0 + float(np.max(np.abs(new_est.left_slope)))
        if same and margin > 10.0 * drift * slope_scale and np.isfinite(prev_drift) and drift < 0.9 * prev_drift:
            return new_est.candidates[choice]
        prev_drift = drift
        est = new_est
        half = (w + 2) * sub.step * 0.5
        window = (max(sub.t0, run[0] - half), min(sub.t1, run[1] + half))
    return None


def _continuity_bound(map_: OrbitMapSigma, rows: np.ndarray, scale: float, tol: float) -> float:
    """Crude no-teleporting bound: C * (max step of c)^(1/d)."""
    if rows.shape[0] < 2:
        return 10.0 * tol
    d = map_.d_value
    delta = float(np.max(np.abs(np.diff(rows, axis=0))))
    return 8.0 * (1.0 + scale) * delta ** (1.0 / d) + 10.0 * tol + 1e-9


def lift_curve(
    group: ReflectionGroup,
    map_: OrbitMapSigma,
    curve: CoeffCurve,
    grid: Grid,
    tol: float = 1e-10,
) -> LiftResult:
    """Track one fiber point per grid sample into a lift of the curve.

    Raises NotInImageAt(t) when a sample leaves sigma(V) (no silent
    projection), and propagates ToleranceViolation from ill-posed samples.
    """
    if curve.n != map_.n_invariants:
        raise DimensionMismatch(
            f"curve has {curve.n} components, sigma has {map_.n_invariants}"
        )
    tpts = grid.points
    rows = curve.evaluate(tpts)
    fibers = _fibers_at(map_, rows, tpts, tol)
    N = len(fibers)
    dim = group.dim
    scale = max(float(np.max(np.abs(np.concatenate([f.ravel() for f in fibers])))), 1e-30)
    eps = _EPS_FACTOR * scale
    counts = np.array([f.shape[0] for f in fibers])
    risky = np.array(
        [
            _min_pairwise(fibers[i]) < eps
            or (i > 0 and counts[i] != counts[i - 1])
            or (i + 1 < N and counts[i] != counts[i + 1])
            for i in range(N)
        ]
    )
    values = np.empty((N, dim))
    values[0] = fibers[0][0]
    swap_log: list[tuple[int, tuple[int, int]]] = []
    unresolved: list[tuple[float, float]] = []
    w = _SIDE_WINDOW
    i = 1
    while i < N:
        if not risky[i]:
            pred = values[i - 1] if i == 1 else 2.0 * values[i - 1] - values[i - 2]
            values[i] = fibers[i][_nearest(fibers[i], pred)]
            i += 1
            continue
        i0 = i
        i1 = i
        while i1 + 1 < N and risky[i1 + 1]:
            i1 += 1
        if i0 - 1 < max(i0 - w, 0) or i1 + 1 >= N or i0 < w + 1:
            # window touches the domain boundary: nearest-point continuation
            for j in range(i0, min(i1 + 2, N)):
                pred = values[j - 1] if j == 1 else 2.0 * values[j - 1] - values[j - 2]
                values[j] = fibers[j][_nearest(fibers[j], pred)]
            i = i1 + 2
            continue
        exit_val = _resolve_window(
            map_, curve, grid, tol, eps, i0, i1, values[i0 - 1], w
        )
        if exit_val is None:
            unresolved.append((float(tpts[i0]), float(tpts[i1])))
            for j in range(i0, min(i1 + 2, N)):
                pred = 2.0 * values[j - 1] - values[j - 2] if j >= 2 else values[j - 1]
                values[j] = fibers[j][_nearest(fibers[j], pred)]
            i = i1 + 2
            continue
        exit_idx = _nearest(fibers[i1 + 1], exit_val)
        values[i1 + 1] = fibers[i1 + 1][exit_idx]
        entry_t, exit_t = tpts[i0 - 1], tpts[i1 + 1]
        for j in range(i0, i1 + 1):
            frac = (tpts[j] - entry_t) / (exit_t - entry_t)
            chord = values[i0 - 1] + (values[i1 + 1] - values[i0 - 1]) * frac
            values[j] = fibers[j][_nearest(fibers[j], chord)]
        rank_in = _nearest(fibers[i0 - 1], values[i0 - 1])
        if exit_idx != rank_in or fibers[i0 - 1].shape[0] != fibers[i1 + 1].shape[0]:
            swap_log.append((i0, (rank_in, exit_idx)))
        i = i1 + 2

    residual = 0.0
    for idx in range(N):
        residual = max(
            residual, float(np.max(np.abs(map_.evaluate(values[idx]) - rows[idx])))
        )
    reports: tuple[RegularityReport, ...] = ()
    if grid.level >= 4 and grid.n_cells == 2**grid.level:
        levels = min(6, grid.level)
        reports = tuple(
            regcheck.certify_samples(values[:, j], (grid.t0, grid.t1), levels)
            for j in range(dim)
        )
    steps = np.linalg.norm(np.diff(values, axis=0), axis=1)
    max_step = float(steps.max()) if steps.size else 0.0
    return LiftResult(
        grid=grid,
        group=group,
        values=values,
        residual=residual,
        reports=reports,
        swap_log=tuple(swap_log),
        unresolved=tuple(unresolved),
        max_step=max_step,
        continuity_bound=_continuity_bound(map_, rows, scale, tol),
    )


def transformed_lift(map_: OrbitMapSigma, lift: LiftResult, element: np.ndarray, curve: CoeffCurve) -> LiftResult:
    """The lift moved by a fixed group element, with residual and regularity
    evidence recomputed from scratch (equivariance check support)."""
    values = lift.values @ element.T
    rows = curve.evaluate(lift.grid.points)
    residual = 0.0
    for idx in range(values.shape[0]):
        residual = max(
            residual, float(np.max(np.abs(map_.evaluate(values[idx]) - rows[idx])))
        )
    reports: tuple[RegularityReport, ...] = ()
    if lift.reports:
        levels = len(lift.reports[0].levels)
        reports = tuple(
            regcheck.certify_samples(values[:, j], (lift.grid.t0, lift.grid.t1), levels)
            for j in range(values.shape[1])
        )
    steps = np.linalg.norm(np.diff(values, axis=0), axis=1)
    return LiftResult(
        grid=lift.grid,
        group=lift.group,
        values=values,
        residual=residual,
        reports=reports,
        swap_log=lift.swap_log,
        unresolved=lift.unresolved,
        max_step=float(steps.max()) if steps.size else 0.0,
        continuity_bound=lift.continuity_bound,
    )


# -- several-variable probe harness ------------------------------------------------

@dataclass(frozen=True)
class ProbeResult:
    name: str
    lipschitz_estimate: float  # sup over the whole probe
    verdict: str
    windows: tuple[tuple[float, float, float], ...] = ()  # (t_lo, t_hi, local sup)


@dataclass(frozen=True)
class LipschitzHarnessReport:
    probes: tuple[ProbeResult, ...]
    verdict: str  # locally-lipschitz-consistent | violation-detected | inconclusive

    LIPSCHITZ_CONSISTENT = "locally-lipschitz-consistent"
    VIOLATION = "violation-detected"
    INCONCLUSIVE = "inconclusive"


def _composed_curve(f, gamma, n: int) -> CoeffCurve:
    """f(gamma(t)) wrapped as a coefficient curve, evaluated on demand."""
    cache: dict[bytes, np.ndarray] = {}

    def column(j):
        def comp(tarr):
            arr = np.atleast_1d(np.asarray(tarr, dtype=float))
            key = arr.tobytes()
            if key not in cache:
                cache[key] = np.array([f(gamma(float(t))) for t in arr])
            out = cache[key][:, j]
            return out if np.asarray(tarr).shape else float(out[0])

        return comp

    return CoeffCurve(tuple(column(j) for j in range(n)))


def lipschitz_harness(
    group: ReflectionGroup,
    map_: OrbitMapSigma,
    f: Callable[[np.ndarray], np.ndarray],
    probes: Sequence[tuple[str, Callable[[float], np.ndarray]]],
    grid: Grid,
    tol: float = 1e-10,
) -> LipschitzHarnessReport:
    """Certify local Lipschitz behaviour of the lift of f along probe curves.

    Each probe gamma is a smooth curve into the domain of f; f(gamma(t)) is
    lifted with lift_curve and the probe's Lipschitz constant is the sup of
    the Euclidean norm of the lift's first difference quotients.
    """
    results = []
    for name, gamma in probes:
        composed = _composed_curve(f, gamma, map_.n_invariants)
        lift = lift_curve(group, map_, composed, grid, tol)
        h = grid.step
        quots = np.stack(
            [
                regcheck.difference_quotients(lift.values[:, j], h, 1)
                for j in range(lift.values.shape[1])
            ],
            axis=1,
        )
        lip = float(np.max(np.linalg.norm(quots, axis=1)))
        verdict = lift.min_verdict() if lift.reports else regcheck.INCONCLUSIVE
        results.append(ProbeResult(name, lip, verdict))
    if all(VERDICT_RANK[r.verdict] >= VERDICT_RANK[regcheck.LIPSCHITZ] for r in results):
        overall = LipschitzHarnessReport.LIPSCHITZ_CONSISTENT
    elif any(r.verdict == regcheck.UNBOUNDED for r in results):
        overall = LipschitzHarnessReport.VIOLATION
    else:
        overall = LipschitzHarnessReport.INCONCLUSIVE
    return LipschitzHarnessReport(tuple(results), overall)
