"""Monic hyperbolic polynomials: hyperbolicity tests and real root extraction.

A monic real polynomial is stored through the alternating-sign coefficient
vector (a_1, ..., a_n):

    P(x) = x^n + sum_j (-1)^j a_j x^(n-j)

so that a_j equals the j-th elementary symmetric function of the roots.
Root extraction uses a Sturm chain for certified real-root counting and
isolation, then bisection plus Newton polishing.  Root clusters narrower
than tol^(1/multiplicity) are collapsed to a repeated root (at the cluster
centroid, computed from the matching derivative): collisions of real roots
are the expected regime here and must not surface as spurious complex
pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NotHyperbolic

# Relative threshold below which a Sturm remainder counts as zero (gcd found).
_GCD_EPS = 1e-11
# Relative zero threshold for coefficient trimming.
_TRIM_EPS = 1e-13
# Isolation intervals narrower than this are emitted as root clusters.
_WIDTH_FLOOR = 1e-13
_MAX_NEWTON = 60


@dataclass(frozen=True, eq=False)
class MonicHyperbolic:
    """Monic real polynomial in the alternating-sign coefficient convention."""

    coeffs: np.ndarray

    def __init__(self, coeffs: Sequence[float]):
        arr = np.asarray(coeffs, dtype=float).reshape(-1).copy()
        if arr.size == 0:
            raise ValueError("polynomial must have degree >= 1")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficients must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)

    @property
    def degree(self) -> int:
        return self.coeffs.size

    def full_coeffs(self) -> np.ndarray:
        """Descending power-basis coefficients [1, -a1, +a2, ...]."""
        n = self.degree
        signs = (-1.0) ** np.arange(1, n + 1)
        return np.concatenate(([1.0], signs * self.coeffs))

    def __repr__(self) -> str:
        return f"MonicHyperbolic(degree={self.degree}, coeffs={self.coeffs.tolist()})"


@dataclass(frozen=True, eq=False)
class RootMultiset:
    """Nondecreasing real roots; multiplicity is implied by repeats."""

    values: np.ndarray

    def __init__(self, values: Sequence[float]):
        arr = np.sort(np.asarray(values, dtype=float).reshape(-1))
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size

    def __repr__(self) -> str:
        return f"RootMultiset({self.values.tolist()})"


def coeff_scale(poly: MonicHyperbolic) -> float:
    """Residual scale 1 + max |a_j|; keeps tolerances relative."""
    return 1.0 + float(np.max(np.abs(poly.coeffs))) if poly.degree else 1.0


def from_roots(root_values: Sequence[float] | RootMultiset) -> MonicHyperbolic:
    """Polynomial with the given real roots (Vieta: a_j = e_j(roots))."""
    if isinstance(root_values, RootMultiset):
        vals = root_values.values
    else:
        vals = np.sort(np.asarray(root_values, dtype=float).reshape(-1))
    if vals.size == 0:
        raise ValueError("at least one root required")
    if not np.all(np.isfinite(vals)):
        raise ValueError("roots must be finite")
    n = vals.size
    e = np.zeros(n + 1)
    e[0] = 1.0
    for k, r in enumerate(vals, start=1):
        for j in range(k, 0, -1):
            e[j] += r * e[j - 1]
    return MonicHyperbolic(e[1:])


def evaluate(poly: MonicHyperbolic, x):
    """Horner evaluation; accepts scalars or arrays."""
    return _horner(poly.full_coeffs(), x)


def is_hyperbolic(poly: MonicHyperbolic, tol: float = 1e-10) -> bool:
    """True iff all roots are real up to a coefficient perturbation of tol.

    The real-root count comes from the sign-variation sequence of the Sturm
    chain.  When the count falls short, the tol-ball fallback looks for the
    missing complex pairs near multiple roots: a candidate point absorbs a
    pair when the matching lower derivatives vanish at tolerance scale there.
    """
    _check_tol(tol)
    return _roots_with_fallback(poly, tol) is not None


def roots(poly: MonicHyperbolic, tol: float = 1e-10) -> RootMultiset:
    """All n real roots, sorted, with multiplicity.

    Raises NotHyperbolic if a certified complex pair survives the tol-ball
    fallback.  Output is deterministic for identical input.
    """
    _check_tol(tol)
    vals = _roots_with_fallback(poly, tol)
    if vals is None:
        raise NotHyperbolic(
            f"certified complex root pair (degree {poly.degree}, tol {tol:g})"
        )
    return RootMultiset(vals)


def _check_tol(tol: float) -> None:
    if not (tol > 0.0):
        raise ValueError("tol must be positive")


# -- dense polynomial helpers (descending coefficients, c[0] = leading) -----

def _horner(c: np.ndarray, x):
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, c[0], dtype=float)
    for coef in c[1:]:
        out = out * x + coef
    if out.shape == ():
        return float(out)
    return out


def _trim(c: np.ndarray) -> np.ndarray:
    mag = np.max(np.abs(c)) if c.size else 0.0
    if mag == 0.0:
        return np.zeros(1)
    keep = np.abs(c) > _TRIM_EPS * mag
    first = int(np.argmax(keep))
    return c[first:] if keep[first] else np.zeros(1)

def _deg(c: np.ndarray) -> int:
    return c.size - 1


def _deriv(c: np.ndarray) -> np.ndarray:
    n = _deg(c)
    if n == 0:
        return np.zeros(1)
    return c[:-1] * np.arange(n, 0, -1)


def _polydiv(num: np.ndarray, den: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    q, r = np.polydiv(num, den)
    return np.atleast_1d(q), np.atleast_1d(r)


def _normalize(c: np.ndarray) -> np.ndarray:
    mag = np.max(np.abs(c))
    return c / mag if mag > 0 else c


def _sturm_chain(c: np.ndarray, gcd_eps: float = _GCD_EPS) -> tuple[list[np.ndarray], np.ndarray]:
    """Sturm chain of c, with float-safe remainder truncation.

    Returns (chain, gcd_part): when the remainder sequence collapses to
    numerical zero early, the last chain element approximates gcd(c, c')
    (nonconstant exactly when c has multiple roots).
    """
    c = _normalize(_trim(c))
    chain = [c]
    if _deg(c) == 0:
        return chain, np.ones(1)
    chain.append(_normalize(_trim(_deriv(c))))
    while _deg(chain[-1]) > 0:
        q, r = _polydiv(chain[-2], chain[-1])
        # Division can amplify noise by max|q|; anything below that scale
        # times gcd_eps is numerical zero.
        amp = max(1.0, float(np.max(np.abs(q))))
        r = np.where(np.abs(r) <= gcd_eps * amp, 0.0, r)
        r = _trim(r)
        if r.size == 1 and r[0] == 0.0:
            return chain, chain[-1]
        chain.append(_normalize(-r))
        if len(chain) > 2 * c.size + 4:  # defensive; cannot happen for valid input
            break
    return chain, np.ones(1)


def _eval_noise(c: np.ndarray, x: float) -> float:
    """Rounding-noise scale of Horner evaluation at x."""
    ax = abs(x)
    acc = abs(c[0])
    for coef in c[1:]:
        acc = acc * ax + abs(coef)
    return 2.0 * c.size * np.finfo(float).eps * acc


def _sign_variations(chain: list[np.ndarray], x: float) -> int:
    signs = []
    for c in chain:
        v = _horner(c, x)
        if abs(v) > _eval_noise(c, x):
            signs.append(1 if v > 0 else -1)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _nudge_off_root(c: np.ndarray, x: float, direction: float) -> float:
    """Move x by tiny steps until c(x) stands clear of evaluation noise."""
    step = 1e-12 * max(1.0, abs(x))
    for _ in range(64):
        if abs(_horner(c, x)) > 4.0 * _eval_noise(c, x):
            return x
        x += direction * step
        step *= 2.0
    return x


def _root_bound(c: np.ndarray) -> float:
    """Fujiwara upper bound on |roots|."""
    lead = abs(c[0])
    n = _deg(c)
    if n == 0:
        return 1.0
    best = 0.0
    for k in range(1, n + 1):
        ck = abs(c[k]) / lead
        if ck > 0:
            best = max(best, ck ** (1.0 / k))
    return 2.0 * best + 1.0


def _isolate(chain: list[np.ndarray], lo: float, hi: float) -> list[tuple[float, float, int]]:
    """Disjoint intervals (a, b] each holding `count` roots; count > 1 only
    when the interval has shrunk to the width floor (tight cluster)."""
    sf = chain[0]
    lo = _nudge_off_root(sf, lo, -1.0)
    hi = _nudge_off_root(sf, hi, +1.0)
    out: list[tuple[float, float, int]] = []
    va0 = _sign_variations(chain, lo)
    vb0 = _sign_variations(chain, hi)
    stack = [(lo, hi, va0, vb0)]
    while stack:
        a, b, va, vb = stack.pop()
        count = va - vb
        if count <= 0:
            continue
        if count == 1:
            out.append((a, b, 1))
            continue
        if b - a < _WIDTH_FLOOR * max(1.0, abs(a) + abs(b)):
            out.append((a, b, count))
            continue
        mid = _nudge_off_root(sf, 0.5 * (a + b), +1.0)
        if not (a < mid < b):
            out.append((a, b, count))
            continue
        vmid = _sign_variations(chain, mid)
        stack.append((a, mid, va, vmid))
        stack.append((mid, b, vmid, vb))
    out.sort(key=lambda iv: iv[0])
    return out


def _polish_simple(c: np.ndarray, dc: np.ndarray, lo: float, hi: float) -> float:
    """Bisection to a tight bracket, then safeguarded Newton on c."""
    flo = _horner(c, lo)
    fhi = _horner(c, hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi < 0:
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            fm = _horner(c, mid)
            if fm == 0.0:
                lo = hi = mid
                break
            if flo * fm < 0:
                hi, fhi = mid, fm
            else:
                lo, flo = mid, fm
            if hi - lo < 1e-9 * max(1.0, abs(mid)):
                break
    x = 0.5 * (lo + hi)
    for _ in range(_MAX_NEWTON):
        fx = _horner(c, x)
        dfx = _horner(dc, x)
        if dfx == 0.0:
            break
        step = fx / dfx
        x_new = x - step
        if not (lo - 1e-8 <= x_new <= hi + 1e-8):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-16 * max(1.0, abs(x)):
            x = x_new
            break
        x = x_new
    return x


def _refine_on_original(c: np.ndarray, dc: np.ndarray, x: float, mult: int) -> float:
    # Multiplicity-aware Newton recovers full accuracy on the input poly.
    for _ in range(4):
        fx = _horner(c, x)
        if abs(fx) <= 2.0 * _eval_noise(c, x):
            break
        dfx = _horner(dc, x)
        if dfx == 0.0 or not np.isfinite(dfx):
            break
        step = mult * fx / dfx
        if not np.isfinite(step) or abs(step) > 0.1 * (1.0 + abs(x)):
            break
        x -= step
        if abs(step) <= 1e-16 * max(1.0, abs(x)):
            break
    return x


def _polish_mult_root(c: np.ndarray, x: float, mult: int) -> float:
    """Best float estimate of an m-fold root: the simple root of the
    (m-1)-th derivative.  An m-fold root is ill-conditioned in c itself
    (cluster radius ~ eps^(1/m)); the derivative root is its centroid and
    moves only linearly with coefficient perturbations."""
    d = c
    for _ in range(mult - 1):
        d = _deriv(d)
    dd = _deriv(d)
    for _ in range(40):
        fx = _horner(d, x)
        if abs(fx) <= 2.0 * _eval_noise(d, x):
            break  # below evaluation noise: the step would be noise/noise
        dfx = _horner(dd, x)
        if dfx == 0.0 or not np.isfinite(dfx):
            break
        step = fx / dfx
        if abs(step) > 0.1 * (1.0 + abs(x)):
            break  # wild step: x is not in this root's basin
        x -= step
        if abs(step) <= 1e-16 * max(1.0, abs(x)):
            break
    return x


def _real_roots_mult(
    c: np.ndarray, depth: int = 0, gcd_eps: float = _GCD_EPS
) -> list[tuple[float, int]]:
    """Distinct real roots of c with multiplicities (roots of the square-free
    part; multiplicities recovered from the gcd recursion)."""
    c = _trim(c)
    n = _deg(c)
    if n <= 0 or depth > 64:
        return []
    if n == 1:
        return [(-c[1] / c[0], 1)]
    chain, gcd = _sturm_chain(c, gcd_eps)
    if _deg(gcd) >= 1:
        sf, _ = _polydiv(chain[0], gcd)
        sf = _trim(sf)
        if _deg(sf) <= 0:
            sf = chain[0]
        sf_chain, g2 = _sturm_chain(sf, gcd_eps)
        # rarely the quotient is still not square-free numerically
        while _deg(g2) >= 1:
            sf, _ = _polydiv(sf_chain[0], g2)
            sf = _trim(sf)
            if _deg(sf) <= 0:
                break
            sf_chain, g2 = _sturm_chain(sf, gcd_eps)
    else:
        sf = chain[0]
        sf_chain = chain
    if _deg(sf) <= 0:
        return []
    bound = _root_bound(sf)
    dsf = _deriv(sf)
    dc = _deriv(c)
    found: list[tuple[float, int]] = []
    for a, b, count in _isolate(sf_chain, -bound, bound):
        if count == 1:
            x = _polish_simple(sf, dsf, a, b)
            found.append((_refine_on_original(c, dc, x, 1), 1))
        else:
            found.append((0.5 * (a + b), count))
    if _deg(gcd) >= 1:
        for r2, m2 in _real_roots_mult(gcd, depth + 1, gcd_eps):
            if not found:
                found.append((r2, m2 + 1))
                continue
            i = min(range(len(found)), key=lambda i: abs(found[i][0] - r2))
            x, m = found[i]
            x = _refine_on_original(c, dc, x, m + m2)
            found[i] = (x, m + m2)
    found.sort(key=lambda p: p[0])
    return found


def _collapse_clusters(values: np.ndarray, tol: float, c: np.ndarray | None = None) -> np.ndarray:
    """Merge sorted root values into repeated cluster roots per the
    width < tol^(1/multiplicity) rule.

    The merged value starts from the cluster mean; when the full coefficient
    vector is available, the matching derivative root (the cluster centroid,
    well conditioned) replaces the mean unless it leaves the cluster."""
    out = values.copy()
    i = 0
    while i < out.size:
        j = i + 1
        while j < out.size:
            width = out[j] - out[i]
            size = j - i + 1
            if width < tol ** (1.0 / size):
                j += 1
            else:
                break
        if j - i > 1:
            spread = float(out[j - 1] - out[i])
            merged = float(np.mean(out[i:j]))
            if c is not None and spread > 0.0:
                size = j - i
                polished = _polish_mult_root(c, merged, size)
                if abs(polished - merged) <= spread + tol ** (1.0 / size):
                    merged = polished
            out[i:j] = merged
        i = j
    return out


def _taylor_shift(c: np.ndarray, mu: float) -> np.ndarray:
    """Coefficients of p(x + mu) by repeated synthetic division."""
    b = c.copy()
    n = b.size
    for i in range(1, n):
        for j in range(1, n - i + 1):
            b[j] += mu * b[j - 1]
    return b


def _promotion_violation(derivs, scales, x: float, mult: int, tol: float) -> float:
    """How far x is from being a mult-fold root, in units of the tol-ball.

    Coefficient perturbations of size tol*scale(P) move P^(j) by about
    tol*scale_j, so a point within the tol-ball of an m-fold root has
    |P^(j)(x)| of that order for every j < m."""
    worst = 0.0
    for j in range(mult - 1):
        worst = max(worst, abs(_horner(derivs[j], x)) / (tol * scales[j]))
    return worst


def _healthy(derivs, scales, pairs, n: int, tol: float) -> bool:
    """Plausibility of a full root-multiset claim: every root accounted for
    and every multiplicity witnessed by vanishing lower derivatives.  A
    deficit always routes through the interlacing rebuild, which also settles
    whether the missing roots are genuine complex pairs."""
    if sum(m for _, m in pairs) != n:
        return False
    for r, m in pairs:
        for j in range(m):
            if abs(_horner(derivs[j], r)) > 10.0 * tol * scales[j]:
                return False
    return True


def _robust_real_roots(
    c: np.ndarray, tol: float, depth: int = 0, noise_floor: float = 0.0
) -> list[tuple[float, int]]:
    """All real roots with multiplicity, robust to clustered multiple roots.

    Tries the Sturm pipeline first; when its answer fails the health checks,
    rebuilds the multiset from critical-point interlacing (between critical
    points a polynomial is monotone, so simple roots come from guaranteed
    sign-change brackets; near-zero critical values carry the multiple
    roots).  Critical points come from the same machinery recursively.
    noise_floor is the absolute uncertainty of evaluated values inherited
    from upstream coefficient rounding (e.g. the recentering shift)."""
    c = _trim(c)
    n = _deg(c)
    if n <= 0 or depth > 24:
        return []
    if n == 1:
        return [(-c[1] / c[0], 1)]
    derivs = [c]
    for _ in range(n):
        derivs.append(_deriv(derivs[-1]))
    scales = [1.0 + float(np.max(np.abs(d))) for d in derivs]
    floor = max(noise_floor, 4.0 * c.size * np.finfo(float).eps * scales[0])
    pairs = _real_roots_mult(c)
    pairs = [(r if m == 1 else _polish_mult_root(c, r, m), m) for r, m in pairs]
    if _healthy(derivs, scales, pairs, n, tol):
        return pairs
    tau0 = tol * scales[0]
    # differentiation amplifies inherited coefficient noise by at most n
    crit = sorted(x for x, _ in _robust_real_roots(derivs[1], tol, depth + 1, floor * n))
    bound = _root_bound(c) + 1.0
    anchors = [-bound] + crit + [bound]
    vals = [_horner(c, a) for a in anchors]
    zeroish = [abs(v) <= tau0 for v in vals]
    pairs = []
    for i in range(len(anchors) - 1):
        if zeroish[i] or zeroish[i + 1]:
            continue
        if (vals[i] > 0) != (vals[i + 1] > 0):
            x = _polish_simple(c, derivs[1], anchors[i], anchors[i + 1])
            pairs.append((x, 1))
    i = 1
    while i < len(anchors) - 1:
        if not zeroish[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(anchors) - 1 and zeroish[j + 1]:
            j += 1
        run_len = j - i + 1
        mult = run_len + 1
        signs_differ = (vals[i - 1] > 0) != (vals[j + 1] > 0)
        if signs_differ != (mult % 2 == 1):
            mult += 1
        mult = min(mult, n)
        center = 0.5 * (anchors[i] + anchors[j])
        x = _polish_mult_root(c, center, mult)
        if _promotion_violation(derivs, scales, x, mult, tol) <= 1.0:
            pairs.append((x, mult))
        else:
            # adjacent clusters hide inside the run: dissect it at noise
            # resolution (tiny values still carry reliable signs)
            pairs.extend(_dissect_run(c, derivs, scales, anchors, vals, i, j, tol, n, floor))
        i = j + 1
    pairs.sort(key=lambda p: p[0])
    return pairs


def _dissect_run(c, derivs, scales, anchors, vals, i, j, tol, n, floor) -> list[tuple[float, int]]:
    """Finer structure of one zeroish anchor run.

    Values below the tol-ball can still sit far above evaluation noise, so
    their signs separate sub-clusters: sign changes between reliable anchors
    give simple roots, noise-level anchors are cluster seeds whose starting
    multiplicity follows the parity of the surrounding reliable signs."""
    idxs = list(range(i - 1, j + 2))
    reliable = {}
    for k in idxs:
        v = vals[k]
        if abs(v) > max(100.0 * _eval_noise(c, anchors[k]), floor):
            reliable[k] = 1 if v > 0 else -1
    # endpoints bracket the run and are never noise-level
    reliable.setdefault(i - 1, 1 if vals[i - 1] > 0 else -1)
    reliable.setdefault(j + 1, 1 if vals[j + 1] > 0 else -1)
    out: list[tuple[float, int]] = []
    rel_order = sorted(reliable)
    for a, b in zip(rel_order, rel_order[1:]):
        seeds = [k for k in range(a + 1, b) if k not in reliable]
        if seeds:
            mult = len(seeds) + 1
            if (reliable[a] != reliable[b]) != (mult % 2 == 1):
                mult += 1
            mult = min(mult, n)
            center = 0.5 * (anchors[seeds[0]] + anchors[seeds[-1]])
            out.append((_polish_mult_root(c, center, mult), mult))
        elif reliable[a] != reliable[b]:
            out.append((_polish_simple(c, derivs[1], anchors[a], anchors[b]), 1))
    return out


def _quadratic_roots(a1: float, a2: float, tol: float) -> np.ndarray | None:
    """Closed form for x^2 - a1 x + a2 with the same tolerance-ball rule:
    a negative discriminant within 4*tol*scale collapses to a double root
    (|P| at the vertex is |disc|/4, matching the promotion criterion)."""
    scale = 1.0 + max(abs(a1), abs(a2))
    disc = a1 * a1 - 4.0 * a2
    if disc <= 0.0:
        if -disc <= 4.0 * tol * scale:
            return np.array([0.5 * a1, 0.5 * a1])
        return None
    sq = np.sqrt(disc)
    r1 = 0.5 * (a1 + sq) if a1 >= 0.0 else 0.5 * (a1 - sq)
    r2 = a2 / r1 if r1 != 0.0 else 0.0
    vals = np.array(sorted((r1, r2)))
    return _collapse_clusters(vals, tol)


def _roots_with_fallback(poly: MonicHyperbolic, tol: float) -> np.ndarray | None:
    n = poly.degree
    if n == 1:
        return np.array([poly.coeffs[0]])
    if n == 2:
        return _quadratic_roots(float(poly.coeffs[0]), float(poly.coeffs[1]), tol)
    # Recenter at the root centroid: clusters far from the origin are badly
    # conditioned in the raw coefficients, and the centroid is exact in a1.
    # The tol-ball stays anchored to the ORIGINAL coefficient scale, so the
    # effective tolerance in the shifted frame compensates for the rescaling.
    mu = poly.coeffs[0] / n
    c = _taylor_shift(poly.full_coeffs(), mu)
    scale_shift = 1.0 + float(np.max(np.abs(c)))
    tol_eff = tol * coeff_scale(poly) / scale_shift
    # rounding inside the shift leaves absolute coefficient noise at the
    # original scale; evaluated values inherit it
    shift_noise = 4.0 * (n + 1) * np.finfo(float).eps * coeff_scale(poly) * max(1.0, abs(mu))
    pairs = _robust_real_roots(c, tol_eff, noise_floor=shift_noise)
    total = sum(m for _, m in pairs)
    if total < n and (n - total) % 2 == 0 and n >= 2:
        derivs = [c]
        for _ in range(n):
            derivs.append(_deriv(derivs[-1]))
        scales = [1.0 + float(np.max(np.abs(d))) for d in derivs]
        # remaining deficit: complex pairs within the tol-ball coalesce into
        # higher multiplicities; rank candidate promotions by how cleanly the
        # lower derivatives vanish at the witness point
        crit = [x for x, _ in _robust_real_roots(derivs[1], tol_eff, noise_floor=shift_noise * n)]
        while total < n:
            best = None  # (violation, tiebreak, index-or-None, x, new_mult)
            for i, (r, m) in enumerate(pairs):
                if m + 2 > n:
                    continue
                x = _polish_mult_root(c, r, m + 2)
                if abs(x - r) > 0.5 * (1.0 + abs(r)):
                    continue  # Newton wandered off; not a local cluster
                viol = _promotion_violation(derivs, scales, x, m + 2, tol_eff)
                cand = (viol, abs(x - r), i, x, m + 2)
                if best is None or cand[:2] < best[:2]:
                    best = cand
            for x0 in crit:
                # a critical point inside an existing root's collapse radius
                # belongs to that cluster: let the promotion above absorb it
                if any(abs(x0 - r) < tol ** (1.0 / (m + 2)) for r, m in pairs):
                    continue
                viol = _promotion_violation(derivs, scales, x0, 2, tol_eff)
                cand = (viol, 0.0, None, x0, 2)
                if best is None or cand[:2] < best[:2]:
                    best = cand
            if best is None or best[0] > 1.0:
                return None
            _, _, idx, x, new_m = best
            if idx is None:
                pairs.append((x, 2))
            else:
                pairs[idx] = (x, new_m)
            pairs.sort(key=lambda p: p[0])
            total += 2
    if total < n:
        return None
    vals = np.concatenate([np.full(m, r) for r, m in pairs])
    vals = np.sort(vals)[:n]
    return _collapse_clusters(vals, tol, c) + mu
