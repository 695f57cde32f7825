"""Coefficient-curve expression language, sampling, and dyadic grids.

Grammar (see docs/grammar.md for the EBNF):

    expr  = term { ("+" | "-") term }
    term  = unary { ("*" | "/") unary }
    unary = { "+" | "-" } power
    power = atom [ "^" integer ]
    atom  = number | variable | function "(" expr { "," expr } ")" | "(" expr ")"

Functions: abs, sin, cos, exp, pow(base, alpha), powabs(base, alpha).
powabs(b, alpha) = |b|^alpha is the guarded form for rational exponents;
pow requires a nonnegative base whenever alpha is not an integer.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    EvalError,
    ExprDomainError,
    ExprSyntaxError,
    InvalidWindow,
)

_FUNCTIONS = {"abs": 1, "sin": 1, "cos": 1, "exp": 1, "pow": 2, "powabs": 2}


# -- abstract syntax ---------------------------------------------------------

class CurveExpr:
    """Base class for expression nodes; immutable and hashable."""

    def __call__(self, t):
        return evaluate_expr(self, t)


@dataclass(frozen=True)
class Num(CurveExpr):
    value: float


@dataclass(frozen=True)
class Var(CurveExpr):
    name: str


@dataclass(frozen=True)
class Neg(CurveExpr):
    arg: CurveExpr


@dataclass(frozen=True)
class BinOp(CurveExpr):
    op: str  # one of + - * /
    left: CurveExpr
    right: CurveExpr


@dataclass(frozen=True)
class IntPow(CurveExpr):
    base: CurveExpr
    exponent: int


@dataclass(frozen=True)
class Call(CurveExpr):
    fn: str
    args: tuple = ()


# -- tokenizer / parser ------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None or m.end() == pos:
            stripped = src[pos:].lstrip()
            if not stripped:
                break
            bad = len(src) - len(stripped)
            raise ExprSyntaxError(f"unexpected character {src[bad]!r}", bad)
        for kind in ("num", "name", "op"):
            text = m.group(kind)
            if text is not None:
                tokens.append((kind, text, m.start(kind)))
                break
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, src: str, variables: Sequence[str]):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0
        self.variables = set(variables)

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        if tok is None:
            raise ExprSyntaxError("unexpected end of input", len(self.src))
        self.i += 1
        return tok

    def expect_op(self, op: str):
        tok = self.take()
        if tok[0] != "op" or tok[1] != op:
            raise ExprSyntaxError(f"expected {op!r}, got {tok[1]!r}", tok[2])

    def parse(self) -> CurveExpr:
        node = self.expr()
        tok = self.peek()
        if tok is not None:
            raise ExprSyntaxError(f"trailing input {tok[1]!r}", tok[2])
        return node

    def expr(self) -> CurveExpr:
        node = self.term()
        while (tok := self.peek()) and tok[0] == "op" and tok[1] in "+-":
            self.take()
            node = BinOp(tok[1], node, self.term())
        return node

    def term(self) -> CurveExpr:
        node = self.unary()
        while (tok := self.peek()) and tok[0] == "op" and tok[1] in "*/":
            self.take()
            node = BinOp(tok[1], node, self.unary())
        return node

    def unary(self) -> CurveExpr:
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] in "+-":
            self.take()
            inner = self.unary()
            return inner if tok[1] == "+" else Neg(inner)
        return self.power()

    def power(self) -> CurveExpr:
        base = self.atom()
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] == "^":
            self.take()
            num = self.take()
            if num[0] != "num" or "." in num[1] or "e" in num[1].lower():
                raise ExprSyntaxError("^ takes an integer exponent", num[2])
            return IntPow(base, int(num[1]))
        return base

    def atom(self) -> CurveExpr:
        tok = self.take()
        kind, text, pos = tok
        if kind == "num":
            return Num(float(text))
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        if kind == "name":
            nxt = self.peek()
            if nxt and nxt[0] == "op" and nxt[1] == "(":
                return self.call(text, pos)
            if text in self.variables:
                return Var(text)
            raise ExprSyntaxError(f"unknown variable {text!r}", pos)
        raise ExprSyntaxError(f"unexpected token {text!r}", pos)

    def call(self, name: str, pos: int) -> CurveExpr:
        if name not in _FUNCTIONS:
            raise ExprSyntaxError(f"unknown function {name!r}", pos)
        self.expect_op("(")
        args = [self.expr()]
        while (tok := self.peek()) and tok[0] == "op" and tok[1] == ",":
            self.take()
            args.append(self.expr())
        self.expect_op(")")
        if len(args) != _FUNCTIONS[name]:
            raise ExprSyntaxError(
                f"{name} takes {_FUNCTIONS[name]} argument(s), got {len(args)}", pos
            )
        if name in ("pow", "powabs"):
            exponent = _const_value(args[1])
            if exponent is None:
                raise ExprSyntaxError(f"{name} exponent must be a constant", pos)
            if name == "pow":
                base_val = _const_value(args[0])
                if (
                    base_val is not None
                    and base_val < 0
                    and exponent != int(exponent)
                ):
                    raise ExprDomainError(
                        "pow of a negative constant with non-integer exponent"
                    )
        return Call(name, tuple(args))


def _const_value(node: CurveExpr) -> float | None:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Neg):
        inner = _const_value(node.arg)
        return None if inner is None else -inner
    if isinstance(node, BinOp):
        lv, rv = _const_value(node.left), _const_value(node.right)
        if lv is None or rv is None:
            return None
        if node.op == "/" and rv == 0:
            return None
        return {"+": lv + rv, "-": lv - rv, "*": lv * rv, "/": lv / rv if rv else None}[node.op]
    return None


def parse_curve_expr(src: str, variables: Sequence[str] = ("t",)) -> CurveExpr:
    """Parse one expression; raises ExprSyntaxError with the character position."""
    if not src or not src.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(src, variables).parse()


# -- printing (round-trip stable) --------------------------------------------

def expr_to_str(node: CurveExpr) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        inner = expr_to_str(node.arg)
        if isinstance(node.arg, (BinOp, Neg)):
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, BinOp):
        left = expr_to_str(node.left)
        right = expr_to_str(node.right)
        if isinstance(node.left, BinOp) and node.left.op in "+-" and node.op in "*/":
            left = f"({left})"
        if isinstance(node.right, (BinOp, Neg)):
            right = f"({right})"
        return f"{left}{node.op}{right}"
    if isinstance(node, IntPow):
        base = expr_to_str(node.base)
        if not isinstance(node.base, (Num, Var, Call)):
            base = f"({base})"
        return f"{base}^{node.exponent}"
    if isinstance(node, Call):
        return f"{node.fn}({','.join(expr_to_str(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


def substitute(node: CurveExpr, bindings: dict[str, CurveExpr]) -> CurveExpr:
    """Replace variables by expressions (symbolic composition)."""
    if isinstance(node, Var):
        return bindings.get(node.name, node)
    if isinstance(node, Neg):
        return Neg(substitute(node.arg, bindings))
    if isinstance(node, BinOp):
        return BinOp(node.op, substitute(node.left, bindings), substitute(node.right, bindings))
    if isinstance(node, IntPow):
        return IntPow(substitute(node.base, bindings), node.exponent)
    if isinstance(node, Call):
        return Call(node.fn, tuple(substitute(a, bindings) for a in node.args))
    return node


# -- evaluation ---------------------------------------------------------------

def _first_bad_t(t: np.ndarray, mask: np.ndarray) -> float:
    idx = int(np.argmax(mask))
    return float(np.ravel(t)[idx]) if t.shape else float(t)


def _eval(node: CurveExpr, env: dict[str, np.ndarray], t: np.ndarray):
    if isinstance(node, Num):
        return np.full(t.shape, node.value)
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_eval(node.arg, env, t)
    if isinstance(node, BinOp):
        lv = _eval(node.left, env, t)
        rv = _eval(node.right, env, t)
        if node.op == "+":
            return lv + rv
        if node.op == "-":
            return lv - rv
        if node.op == "*":
            return lv * rv
        bad = rv == 0.0
        if np.any(bad):
            raise EvalError("division by zero", _first_bad_t(t, bad))
        return lv / rv
    if isinstance(node, IntPow):
        base = _eval(node.base, env, t)
        if node.exponent < 0:
            bad = base == 0.0
            if np.any(bad):
                raise EvalError("zero base with negative exponent", _first_bad_t(t, bad))
        return base ** float(node.exponent)
    if isinstance(node, Call):
        a0 = _eval(node.args[0], env, t)
        if node.fn == "abs":
            return np.abs(a0)
        if node.fn == "sin":
            return np.sin(a0)
        if node.fn == "cos":
            return np.cos(a0)
        if node.fn == "exp":
            return np.exp(a0)
        alpha = _const_value(node.args[1])
        if node.fn == "powabs":
            mag = np.abs(a0)
        else:
            if alpha != int(alpha):
                bad = a0 < 0.0
                if np.any(bad):
                    raise EvalError(
                        "pow of negative base with non-integer exponent",
                        _first_bad_t(t, bad),
                    )
            mag = a0
        if alpha < 0:
            bad = mag == 0.0
            if np.any(bad):
                raise EvalError("zero base with negative exponent", _first_bad_t(t, bad))
        with np.errstate(invalid="ignore"):
            return np.power(mag, alpha)
    raise TypeError(f"not an expression node: {node!r}")


def evaluate_expr(node: CurveExpr, t, var: str = "t"):
    """Evaluate at scalar or array t; raises EvalError at singular points."""
    arr = np.asarray(t, dtype=float)
    out = _eval(node, {var: arr}, arr)
    out = np.asarray(out, dtype=float)
    bad = ~np.isfinite(out)
    if np.any(bad):
        raise EvalError("non-finite value", _first_bad_t(arr, bad))
    if arr.shape == ():
        return float(out)
    return out


def evaluate_with_env(node: CurveExpr, env: dict[str, float]):
    """Evaluate a multi-variable expression at one point."""
    arrs = {k: np.asarray(v, dtype=float) for k, v in env.items()}
    probe = next(iter(arrs.values()))
    out = np.asarray(_eval(node, arrs, probe), dtype=float)
    if not np.all(np.isfinite(out)):
        raise EvalError("non-finite value", float(probe))
    return float(out) if out.shape == () else out


def split_top_level(src: str, sep: str = ",") -> list[str]:
    """Split on separators outside parentheses (component lists may contain
    function calls with commas)."""
    parts = []
    depth = 0
    cur = []
    for ch in src:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts]


# -- smoothness labels ---------------------------------------------------------

@dataclass(frozen=True)
class SmoothnessClass:
    """Declared regularity label; metadata only, never inferred."""

    order: int | None  # None means C^infinity
    lipschitz_modifier: bool = False  # the ",1" in C^{k,1}

    @classmethod
    def parse(cls, text: str) -> "SmoothnessClass":
        s = text.strip().replace("^", "").replace("{", "").replace("}", "")
        if not s.upper().startswith("C"):
            raise ValueError(f"not a smoothness label: {text!r}")
        body = s[1:]
        if body.lower() in ("inf", "oo", "infinity"):
            return cls(None)
        if "," in body:
            k, m = body.split(",")
            if m.strip() != "1":
                raise ValueError(f"unsupported modifier in {text!r}")
            return cls(int(k), True)
        return cls(int(body))

    @property
    def label(self) -> str:
        if self.order is None:
            return "Cinf"
        if self.lipschitz_modifier:
            return f"C{self.order},1"
        return f"C{self.order}"


# -- coefficient curves --------------------------------------------------------

@dataclass(frozen=True)
class SampleComponent:
    """Dense samples with piecewise-cubic interpolation for off-grid queries."""

    t_samples: np.ndarray
    values: np.ndarray
    _spline: Callable = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        ts = np.asarray(self.t_samples, dtype=float)
        vs = np.asarray(self.values, dtype=float)
        if ts.size != vs.size or ts.size < 2:
            raise ValueError("sample table needs matching t/value columns, >= 2 rows")
        if np.any(np.diff(ts) <= 0):
            raise ValueError("sample times must be strictly increasing")
        object.__setattr__(self, "t_samples", ts)
        object.__setattr__(self, "values", vs)
        object.__setattr__(self, "_spline", CubicSpline(ts, vs))

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        lo, hi = self.t_samples[0], self.t_samples[-1]
        pad = 1e-12 * (1.0 + abs(hi - lo))
        bad = (arr < lo - pad) | (arr > hi + pad)
        if np.any(bad):
            raise EvalError("query outside the sampled range", _first_bad_t(arr, bad))
        out = self._spline(np.clip(arr, lo, hi))
        return float(out) if arr.shape == () else out


@dataclass(frozen=True)
class CoeffCurve:
    """Curve t -> (a_1(t), ..., a_n(t)) given componentwise.

    Components are expression ASTs, sample tables, or plain callables.
    declared_class is user-supplied metadata used for reporting only;
    the regularity certifier provides the empirical check.
    """

    components: tuple
    declared_class: SmoothnessClass = SmoothnessClass(None)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise ValueError("curve needs at least one component")

    @property
    def n(self) -> int:
        return len(self.components)

    def evaluate(self, t) -> np.ndarray:
        """Rows of coefficient vectors; shape (len(t), n)."""
        arr = np.asarray(t, dtype=float)
        cols = []
        for comp in self.components:
            if isinstance(comp, CurveExpr):
                vals = evaluate_expr(comp, arr)
            else:
                vals = comp(arr)
            cols.append(np.broadcast_to(np.asarray(vals, dtype=float), arr.shape))
        return np.stack(cols, axis=-1)

    @classmethod
    def from_exprs(cls, sources: Sequence[str], declared_class="Cinf") -> "CoeffCurve":
        cl = declared_class if isinstance(declared_class, SmoothnessClass) else SmoothnessClass.parse(declared_class)
        return cls(tuple(parse_curve_expr(s) for s in sources), cl)


# -- grids ----------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    """Uniform partition of [t0, t1]; level counts dyadic refinements.

    A freshly built grid has n_cells = 2^level; a refined window keeps the
    halved step of its parent, so its cell count need not be a power of two.
    """

    t0: float
    t1: float
    level: int
    n_cells: int

    def __post_init__(self):
        if not (self.t1 > self.t0):
            raise InvalidWindow(f"degenerate domain [{self.t0}, {self.t1}]")
        if self.n_cells < 1:
            raise InvalidWindow("grid needs at least one cell")

    @classmethod
    def dyadic(cls, t0: float, t1: float, level: int) -> "Grid":
        if level < 0:
            raise ValueError("level must be >= 0")
        return cls(float(t0), float(t1), level, 2**level)

    @property
    def step(self) -> float:
        return (self.t1 - self.t0) / self.n_cells

    @property
    def points(self) -> np.ndarray:
        return self.t0 + (self.t1 - self.t0) * np.arange(self.n_cells + 1) / self.n_cells

    def refine(self, window: tuple[float, float] | None = None) -> "Grid":
        """Halve the step, restricted to `window` (snapped outward to the
        child lattice so refined points stay nested in later refinements)."""
        if window is None:
            window = (self.t0, self.t1)
        w0, w1 = float(window[0]), float(window[1])
        if not (w1 > w0):
            raise InvalidWindow(f"degenerate window [{w0}, {w1}]")
        if w0 < self.t0 - 1e-12 or w1 > self.t1 + 1e-12:
            raise InvalidWindow(f"window [{w0}, {w1}] outside domain [{self.t0}, {self.t1}]")
        child = 0.5 * self.step
        i0 = int(np.floor((w0 - self.t0) / child + 1e-9))
        i1 = int(np.ceil((w1 - self.t0) / child - 1e-9))
        i0 = max(i0, 0)
        i1 = min(i1, 2 * self.n_cells)
        if i1 <= i0:
            raise InvalidWindow(f"window [{w0}, {w1}] collapses on the child lattice")
        return Grid(self.t0 + i0 * child, self.t0 + i1 * child, self.level + 1, i1 - i0)


def refine(grid: Grid, window: tuple[float, float]) -> Grid:
    return grid.refine(window)


def sample(curve: CoeffCurve, grid: Grid) -> np.ndarray:
    """Coefficient vectors at each grid point; shape (len(points), n)."""
    return curve.evaluate(grid.points)


# -- CSV interchange --------------------------------------------------------------

def write_samples_csv(path, t: np.ndarray, columns: np.ndarray, names: Sequence[str]) -> None:
    """Header `t,<names...>`, one row per grid point, 17 significant digits."""
    columns = np.atleast_2d(np.asarray(columns, dtype=float))
    if columns.shape[0] != np.asarray(t).size:
        columns = columns.T
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", *names])
        for i, ti in enumerate(np.asarray(t, dtype=float)):
            writer.writerow([f"{ti:.17g}", *(f"{x:.17g}" for x in columns[i])])


def read_samples_csv(path) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Returns (t, columns with shape (N, n), column names)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0].strip() != "t":
            raise ValueError(f"{path}: first CSV column must be 't'")
        names = [h.strip() for h in header[1:]]
        rows = [[float(x) for x in row] for row in reader if row]
    data = np.asarray(rows, dtype=float)
    if data.size == 0 or data.shape[1] != len(names) + 1:
        raise ValueError(f"{path}: malformed CSV body")
    return data[:, 0], data[:, 1:], names


def read_curve_csv(path, declared_class="C1") -> CoeffCurve:
    """Curve from dense samples; off-grid queries use cubic interpolation."""
    t, cols, _ = read_samples_csv(path)
    comps = tuple(SampleComponent(t, cols[:, j]) for j in range(cols.shape[1]))
    cl = declared_class if isinstance(declared_class, SmoothnessClass) else SmoothnessClass.parse(declared_class)
    return CoeffCurve(comps, cl)
