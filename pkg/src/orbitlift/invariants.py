"""Finite reflection groups: catalog, invariant maps, orbits, fibers, k-data.

Catalog families and their invariant maps sigma : V -> R^n:

  A(n-1)  permutations of R^n        sigma_j = e_j(v),            degrees 1..n
  B(n)    signed permutations        sigma_j = e_j(v_1^2,...),    degrees 2,4,..,2n
  D(n)    even-sign permutations     e_j(v^2) for j < n, e_n(v),  degrees 2,..,2n-2, n
  I2(m)   dihedral on R^2            (x^2+y^2, Re((x+iy)^m)),     degrees 2, m

Elementary symmetric functions are evaluated on canonically sorted inputs,
so sigma is bitwise invariant under any exactly-represented group element
(signed permutation matrices are exact in floating point).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import hyperpoly
from .errors import (
    DimensionMismatch,
    EnumerationTooLarge,
    NotHyperbolic,
    ToleranceViolation,
    UnsupportedParameter,
)

ENUM_LIMIT = 10_000

_DEDUP_DECIMALS = 10


@dataclass(frozen=True, eq=False)
class ReflectionGroup:
    kind: str  # "A", "B", "D", "I2"
    param: int
    dim: int
    order: int
    generators: tuple[np.ndarray, ...]
    _elements: list = field(default=None, repr=False, compare=False)

    @property
    def label(self) -> str:
        return f"{self.kind}:{self.param}"

    def elements(self) -> list[np.ndarray]:
        """All group elements by closure enumeration (cached)."""
        if self._elements is None:
            if self.order > ENUM_LIMIT:
                raise EnumerationTooLarge(
                    f"{self.label} has order {self.order} > {ENUM_LIMIT}"
                )
            object.__setattr__(self, "_elements", _closure(self.generators, self.dim))
        return self._elements


def _mat_key(m: np.ndarray) -> tuple:
    r = np.round(m, _DEDUP_DECIMALS)
    r[r == 0.0] = 0.0  # normalize -0.0
    return tuple(r.ravel())


def _closure(generators, dim) -> list[np.ndarray]:
    seen = {}
    frontier = [np.eye(dim)]
    seen[_mat_key(frontier[0])] = frontier[0]
    while frontier:
        nxt = []
        for m in frontier:
            for g in generators:
                prod = g @ m
                key = _mat_key(prod)
                if key not in seen:
                    if len(seen) >= ENUM_LIMIT:
                        raise EnumerationTooLarge("closure exceeded enumeration limit")
                    seen[key] = prod
                    nxt.append(prod)
        frontier = nxt
    return [seen[k] for k in sorted(seen.keys())]


def _transposition(dim: int, i: int) -> np.ndarray:
    m = np.eye(dim)
    m[[i, i + 1]] = m[[i + 1, i]]
    return m


def make_group(kind: str, param: int) -> ReflectionGroup:
    """Catalog constructor; orders are n!, 2^n n!, 2^(n-1) n!, 2m."""
    kind = kind.strip()
    if kind == "A":
        if param < 1:
            raise UnsupportedParameter("A needs parameter >= 1")
        dim = param + 1
        gens = [_transposition(dim, i) for i in range(param)]
        return ReflectionGroup("A", param, dim, math.factorial(dim), tuple(gens))
    if kind == "B":
        if param < 2:
            raise UnsupportedParameter("B needs parameter >= 2")
        dim = param
        gens = [_transposition(dim, i) for i in range(dim - 1)]
        flip = np.eye(dim)
        flip[-1, -1] = -1.0
        gens.append(flip)
        return ReflectionGroup("B", param, dim, 2**dim * math.factorial(dim), tuple(gens))
    if kind == "D":
        if param < 3:
            raise UnsupportedParameter("D needs parameter >= 3")
        dim = param
        gens = [_transposition(dim, i) for i in range(dim - 1)]
        dflip = np.eye(dim)
        dflip[dim - 2 : dim, dim - 2 : dim] = [[0.0, -1.0], [-1.0, 0.0]]
        gens.append(dflip)
        return ReflectionGroup(
            "D", param, dim, 2 ** (dim - 1) * math.factorial(dim), tuple(gens)
        )
    if kind == "I2":
        if param < 2:
            raise UnsupportedParameter("I2 needs parameter >= 2")
        theta = 2.0 * np.pi / param
        rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        # trig of rational angles lands a few ulp off exactly representable
        # values (cos(pi/2) = 6.1e-17); snap so those generators stay exact
        for exact in (0.0, 0.5, -0.5, 1.0, -1.0):
            rot[np.abs(rot - exact) < 4e-16] = exact
        ref = np.array([[1.0, 0.0], [0.0, -1.0]])
        return ReflectionGroup("I2", param, 2, 2 * param, (rot, ref))
    raise UnsupportedParameter(f"unknown family {kind!r} (expected A, B, D, I2)")


def parse_group(spec: str) -> ReflectionGroup:
    """Parse catalog labels like "A:2", "B:3", "I2:5"."""
    try:
        kind, param = spec.split(":")
        return make_group(kind, int(param))
    except ValueError as exc:
        raise UnsupportedParameter(f"bad group spec {spec!r}") from exc


# -- invariant map -------------------------------------------------------------

def _esp_all(values: np.ndarray) -> np.ndarray:
    """All elementary symmetric functions e_1..e_n of canonically sorted input."""
    vals = np.sort(values)
    n = vals.size
    e = np.zeros(n + 1)
    e[0] = 1.0
    for k, x in enumerate(vals, start=1):
        for j in range(k, 0, -1):
            e[j] += x * e[j - 1]
    return e[1:]


def _signed_product(values: np.ndarray) -> float:
    """prod(values) evaluated in canonical order (sign times sorted-|.| product)."""
    sign = 1.0
    for x in values:
        if x < 0:
            sign = -sign
        elif x == 0:
            return 0.0
    out = 1.0
    for m in np.sort(np.abs(values)):
        out *= m
    return sign * out


def _re_complex_power(x: float, y: float, m: int) -> float:
    """Re((x + iy)^m) by binary powering; no trig, deterministic."""
    rr, ri = 1.0, 0.0
    bx, by = float(x), float(y)
    e = m
    while e:
        if e & 1:
            rr, ri = rr * bx - ri * by, rr * by + ri * bx
        e >>= 1
        if e:
            bx, by = bx * bx - by * by, 2.0 * bx * by
    return rr


@dataclass(frozen=True, eq=False)
class OrbitMapSigma:
    group: ReflectionGroup
    n_invariants: int
    degrees: tuple[int, ...]

    @property
    def d_value(self) -> int:
        """Maximal invariant degree."""
        return max(self.degrees)

    def evaluate(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.size != self.group.dim:
            raise DimensionMismatch(
                f"point has dim {v.size}, {self.group.label} acts on R^{self.group.dim}"
            )
        kind = self.group.kind
        if kind == "A":
            return _esp_all(v)
        if kind == "B":
            return _esp_all(v * v)
        if kind == "D":
            e = _esp_all(v * v)
            out = np.empty(v.size)
            out[:-1] = e[:-1]
            out[-1] = _signed_product(v)
            return out
        x, y = v
        return np.array([x * x + y * y, _re_complex_power(x, y, self.group.param)])


def orbit_map(group: ReflectionGroup) -> OrbitMapSigma:
    n = group.dim
    if group.kind == "A":
        degrees = tuple(range(1, n + 1))
    elif group.kind == "B":
        degrees = tuple(2 * j for j in range(1, n + 1))
    elif group.kind == "D":
        degrees = tuple(2 * j for j in range(1, n)) + (n,)
    else:
        degrees = (2, group.param)
    return OrbitMapSigma(group, len(degrees), degrees)


def sigma(map_: OrbitMapSigma, v) -> np.ndarray:
    return map_.evaluate(v)


# -- orbits and stabilizers ------------------------------------------------------

def _point_key(p: np.ndarray) -> tuple:
    r = np.round(p, _DEDUP_DECIMALS)
    r[r == 0.0] = 0.0
    return tuple(r)


def orbit(group: ReflectionGroup, v) -> list[np.ndarray]:
    """{g.v}, deduplicated to 1e-10, sorted lexicographically."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != group.dim:
        raise DimensionMismatch(f"point has dim {v.size}, expected {group.dim}")
    pts = {}
    for g in group.elements():
        p = g @ v
        pts.setdefault(_point_key(p), p)
    return [pts[k] for k in sorted(pts.keys())]


def stabilizer_order(group: ReflectionGroup, v) -> int:
    v = np.asarray(v, dtype=float).reshape(-1)
    tol = 1e-9 * (1.0 + float(np.max(np.abs(v))))
    return sum(1 for g in group.elements() if np.max(np.abs(g @ v - v)) <= tol)


# -- k(rho): irreducible splitting and maximal isotropy ----------------------------

@dataclass(frozen=True)
class IrreducibleRecord:
    dim: int
    basis: np.ndarray  # (ambient_dim, dim) orthonormal columns
    v: np.ndarray      # chosen unit vector with maximal isotropy
    isotropy_order: int
    orbit_size: int


@dataclass(frozen=True)
class KData:
    group_label: str
    group_order: int
    d_value: int
    k_value: int
    records: tuple[IrreducibleRecord, ...]
    candidates_examined: int


def _split_invariant(elements, basis, rng) -> list[np.ndarray]:
    """Split span(basis) into invariant eigenspaces of an averaged random
    symmetric operator; empty result means no split was found."""
    r = basis.shape[1]
    restricted = [basis.T @ g @ basis for g in elements]
    for _ in range(3):
        s = rng.standard_normal((r, r))
        s = s + s.T
        avg = np.zeros((r, r))
        for rg in restricted:
            avg += rg @ s @ rg.T
        avg /= len(restricted)
        w, u = np.linalg.eigh(avg)
        scale = max(1.0, float(np.max(np.abs(w))))
        groups = []
        start = 0
        for i in range(1, r + 1):
            if i == r or w[i] - w[i - 1] > 1e-8 * scale:
                groups.append(slice(start, i))
                start = i
        if len(groups) > 1:
            return [basis @ u[:, g] for g in groups]
    return []


def _irreducible_subspaces(group: ReflectionGroup, rng) -> list[np.ndarray]:
    elements = group.elements()
    pending = [np.eye(group.dim)]
    done = []
    while pending:
        basis = pending.pop()
        if basis.shape[1] == 1:
            done.append(basis)
            continue
        parts = _split_invariant(elements, basis, rng)
        if parts:
            pending.extend(parts)
        else:
            done.append(basis)
    done.sort(key=lambda b: (b.shape[1], _point_key(np.abs(b[:, 0]))))
    return done


def _check_catalog_splitting(group: ReflectionGroup, spaces) -> None:
    dims = sorted(b.shape[1] for b in spaces)
    if group.kind == "A":
        expected = [1, group.dim - 1] if group.dim > 1 else [1]
        ok = dims == sorted(expected)
        if ok and group.dim > 1:
            one_dim = next(b for b in spaces if b.shape[1] == 1)
            ones = np.ones(group.dim) / np.sqrt(group.dim)
            ok = abs(abs(float(one_dim[:, 0] @ ones)) - 1.0) < 1e-8
    elif group.kind == "I2" and group.param == 2:
        ok = dims == [1, 1]
    else:
        ok = dims == [group.dim]
    if not ok:
        raise RuntimeError(
            f"isotypic splitting of {group.label} disagrees with the catalog: {dims}"
        )


def _candidate_directions(basis: np.ndarray, rng, n_random: int = 64) -> list[np.ndarray]:
    dim, r = basis.shape
    proj = basis @ basis.T
    raw = [np.eye(dim)[i] for i in range(dim)]
    raw.append(np.ones(dim))
    for i in range(dim):
        for j in range(i + 1, dim):
            e = np.zeros(dim)
            e[i], e[j] = 1.0, 1.0
            raw.append(e.copy())
            e[j] = -1.0
            raw.append(e.copy())
    out = []
    for w in raw:
        p = proj @ w
        norm = np.linalg.norm(p)
        if norm > 1e-8:
            out.append(p / norm)
    for _ in range(n_random):
        p = basis @ rng.standard_normal(r)
        norm = np.linalg.norm(p)
        if norm > 1e-8:
            out.append(p / norm)
    return out


def compute_k(
    group: ReflectionGroup,
    map_: OrbitMapSigma | None = None,
    seed: int = 0,
) -> KData:
    """k = max(d, orbit sizes of maximal-isotropy points per irreducible summand).

    Candidate points combine structured directions (coordinate axes, the
    diagonal, axis sums/differences, projected into each summand) with seeded
    random unit samples; isotropy orders come from exhaustive enumeration of
    the group elements, so the reported maximum is certified over the
    candidate set.
    """
    if map_ is None:
        map_ = orbit_map(group)
    rng = np.random.default_rng(seed)
    spaces = _irreducible_subspaces(group, rng)
    _check_catalog_splitting(group, spaces)
    records = []
    examined = 0
    for basis in spaces:
        best_v = None
        best_order = 0
        for v in _candidate_directions(basis, rng):
            examined += 1
            so = stabilizer_order(group, v)
            if so > best_order:
                best_order = so
                best_v = v
        if group.order % best_order != 0:
            raise RuntimeError(
                f"stabilizer order {best_order} does not divide |G|={group.order}"
            )
        records.append(
            IrreducibleRecord(
                dim=basis.shape[1],
                basis=basis,
                v=best_v,
                isotropy_order=best_order,
                orbit_size=group.order // best_order,
            )
        )
    d = map_.d_value
    k = max([d] + [r.orbit_size for r in records])
    return KData(group.label, group.order, d, k, tuple(records), examined)


# -- fibers -----------------------------------------------------------------------

def _roots_in_band(coeffs_a: np.ndarray, tol: float) -> tuple[np.ndarray | None, bool]:
    """Roots of the monic polynomial with the given a-vector.

    Returns (roots, near_miss): near_miss marks success only in the widened
    (tol, 10*tol] band."""
    poly = hyperpoly.MonicHyperbolic(coeffs_a)
    try:
        return hyperpoly.roots(poly, tol).values, False
    except NotHyperbolic:
        pass
    try:
        return hyperpoly.roots(poly, 10.0 * tol).values, True
    except NotHyperbolic:
        return None, False


def fiber(map_: OrbitMapSigma, y, tol: float = 1e-10) -> list[np.ndarray]:
    """Full preimage sigma^{-1}(y) (a single orbit), or [] when y is not in
    the image.  Raises ToleranceViolation when y only fits within the
    widened (tol, 10*tol] band: the input is ill-posed at this tolerance."""
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != map_.n_invariants:
        raise DimensionMismatch(
            f"value has dim {y.size}, sigma has {map_.n_invariants} components"
        )
    kind = map_.group.kind
    if kind == "A":
        vals, near = _roots_in_band(y, tol)
        if vals is None:
            return []
        if near:
            raise ToleranceViolation("orbit-space point within (tol, 10*tol] of the image")
        return _dedup_points(itertools.permutations(vals))
    if kind == "B":
        s, near = _sqrt_spectrum(y, tol)
        if s is None:
            return []
        if near:
            raise ToleranceViolation("orbit-space point within (tol, 10*tol] of the image")
        pts = []
        for perm in set(itertools.permutations(s)):
            for signs in itertools.product((1.0, -1.0), repeat=s.size):
                pts.append(np.array(signs) * np.array(perm))
        return _dedup_points(pts)
    if kind == "D":
        n = map_.group.dim
        a = np.concatenate([y[: n - 1], [y[n - 1] ** 2]])
        s, near = _sqrt_spectrum(a, tol)
        if s is None:
            return []
        if near:
            raise ToleranceViolation("orbit-space point within (tol, 10*tol] of the image")
        target = y[n - 1]
        scale = 1.0 + float(np.max(np.abs(y)))
        has_zero = bool(np.min(s) <= (tol * scale) ** 0.5)
        pts = []
        for perm in set(itertools.permutations(s)):
            pv = np.array(perm)
            for signs in itertools.product((1.0, -1.0), repeat=n):
                v = np.array(signs) * pv
                if has_zero or _signed_product(v) * target >= 0.0:
                    pts.append(v)
        return _dedup_points(pts)
    return _fiber_dihedral(map_, y, tol)


def _sqrt_spectrum(coeffs_a: np.ndarray, tol: float) -> tuple[np.ndarray | None, bool]:
    """Nonnegative square roots of the roots of the squares-polynomial."""
    vals, near = _roots_in_band(coeffs_a, tol)
    if vals is None:
        return None, False
    scale = 1.0 + float(np.max(np.abs(coeffs_a)))
    lo = float(vals.min())
    if lo < -10.0 * tol * scale:
        return None, False
    if lo < -tol * scale:
        return np.sqrt(np.clip(vals, 0.0, None)), True
    return np.sqrt(np.clip(vals, 0.0, None)), near


def _chebyshev_t(m: int) -> np.ndarray:
    """T_m in the monomial basis, descending coefficients (exact integers)."""
    prev = np.array([1.0])
    if m == 0:
        return prev
    cur = np.array([1.0, 0.0])
    for _ in range(m - 1):
        nxt = 2.0 * np.concatenate([cur, [0.0]])
        nxt[2:] -= prev
        prev, cur = cur, nxt
    return cur


def _fiber_dihedral(map_: OrbitMapSigma, y, tol: float) -> list[np.ndarray]:
    m = map_.group.param
    scale = 1.0 + float(np.max(np.abs(y)))
    r2, target = float(y[0]), float(y[1])
    if r2 < -10.0 * tol * scale:
        return []
    if r2 < -tol * scale:
        raise ToleranceViolation("radius^2 within (tol, 10*tol] below zero")
    r = np.sqrt(max(r2, 0.0))
    if r <= (tol * scale) ** 0.5:
        if abs(target) > 10.0 * tol * scale:
            return []
        return [np.zeros(2)]
    c = target / r**m
    if abs(c) > 1.0:
        excess = (abs(c) - 1.0) * r**m
        if excess > 10.0 * tol * scale:
            return []
        if excess > tol * scale:
            raise ToleranceViolation("cos(m*theta) target within (tol, 10*tol] above 1")
        c = np.sign(c)
    # cos(m theta) = c in Chebyshev form: roots of (T_m(u) - c) / 2^(m-1)
    full = _chebyshev_t(m)
    full[-1] -= c
    full /= full[0]
    a = full[1:] * (-1.0) ** np.arange(1, m + 1)
    u_roots, near = _roots_in_band(a, max(tol, 1e-12))
    if u_roots is None or near:
        # all m roots of T_m(u) = c are real in [-1, 1]; failure here is noise
        u_roots, _ = _roots_in_band(a, 1e-8)
        if u_roots is None:
            return []
    pts = []
    for u in np.clip(u_roots, -1.0, 1.0):
        sv = r * np.sqrt(max(1.0 - u * u, 0.0))
        pts.append(np.array([r * u, sv]))
        pts.append(np.array([r * u, -sv]))
    return _dedup_points(pts)


def _dedup_points(points) -> list[np.ndarray]:
    out = {}
    for p in points:
        arr = np.asarray(p, dtype=float)
        out.setdefault(_point_key(arr), arr)
    if len(out) > ENUM_LIMIT:
        raise EnumerationTooLarge("fiber exceeds enumeration limit")
    return [out[k] for k in sorted(out.keys())]
