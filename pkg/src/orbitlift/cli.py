"""Command-line front end: selections, lifts, certifications, k-data.

Exit codes: 0 success, 2 when the mathematics says no (non-hyperbolic input,
curve outside the orbit-map image, ill-posed tolerance band), 3 when a
certification is inconclusive and --strict was given.
"""

from __future__ import annotations

import argparse
import re
import sys

import numpy as np

# accept option values like "-1:1" or "-1:1,-2:2" without '=' syntax
_NEGATIVE_VALUE = re.compile(r"^-\d+(\.\d+)?([:,]-?\d+(\.\d+)?)*$")

from . import catalog, curvedsl, invariants, lifting, regcheck, rootflow
from .errors import (
    NotHyperbolic,
    NotInImageAt,
    OrbitLiftError,
    ToleranceViolation,
)

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_INCONCLUSIVE = 3


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _parse_domain(text: str) -> tuple[float, float]:
    lo, hi = text.split(":")
    return float(lo), float(hi)


def _parse_curve(args) -> curvedsl.CoeffCurve:
    if getattr(args, "csv", None):
        return curvedsl.read_curve_csv(args.csv, args.declared_class)
    sources = curvedsl.split_top_level(args.curve)
    return curvedsl.CoeffCurve.from_exprs(sources, args.declared_class)


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _prefixed_report(report: regcheck.RegularityReport, prefix: str) -> list[str]:
    return [f"{prefix}{line}" for line in report.to_text().splitlines()]


def cmd_roots(args) -> int:
    from . import hyperpoly

    coeffs = [float(x) for x in curvedsl.split_top_level(args.poly)]
    poly = hyperpoly.MonicHyperbolic(coeffs)
    values = hyperpoly.roots(poly, args.tol).values
    lines = ["tool: roots", f"degree: {len(coeffs)}", f"tol: {_fmt(args.tol)}"]
    lines += [f"root[{i}]: {_fmt(v)}" for i, v in enumerate(values)]
    _emit("\n".join(lines) + "\n", args.report)
    if args.out:
        curvedsl.write_samples_csv(args.out, np.arange(values.size, dtype=float),
                                   values.reshape(-1, 1), ["root"])
    return EXIT_OK


def _selection_report(args, sel: rootflow.RootBranches, reports) -> str:
    source = args.curve if args.curve else f"csv:{args.csv}"
    lines = [
        "tool: select",
        f"curve: {source}",
        f"domain: {_fmt(args.domain[0])}:{_fmt(args.domain[1])}",
        f"level: {args.level}",
        f"tol: {_fmt(args.tol)}",
        f"declared-class: {args.declared_class}",
        f"branches: {sel.n}",
        f"swap-count: {len(sel.swap_log)}",
    ]
    for i, (idx, perm) in enumerate(sel.swap_log):
        lines.append(f"swap[{i}].index: {idx}")
        lines.append(f"swap[{i}].perm: {','.join(str(p) for p in perm)}")
    lines.append(f"unresolved-count: {len(sel.unresolved)}")
    for i, (lo, hi) in enumerate(sel.unresolved):
        lines.append(f"unresolved[{i}].window: {_fmt(lo)}:{_fmt(hi)}")
    for j, rep in enumerate(reports):
        lines.append(f"branch[{j}].verdict: {rep.verdict}")
    for j, rep in enumerate(reports):
        lines.extend(_prefixed_report(rep, f"branch[{j}].report."))
    return "\n".join(lines) + "\n"


def cmd_select(args) -> int:
    curve = _parse_curve(args)
    grid = curvedsl.Grid.dyadic(args.domain[0], args.domain[1], args.level)
    sel = rootflow.differentiable_selection(curve, grid, args.tol)
    reports = [
        regcheck.certify_samples(branch, args.domain, args.levels)
        for branch in sel.branches
    ]
    if args.out:
        names = [f"branch{j}" for j in range(sel.n)]
        curvedsl.write_samples_csv(args.out, grid.points, sel.branches.T, names)
    _emit(_selection_report(args, sel, reports), args.report)
    if args.strict and any(r.verdict == regcheck.INCONCLUSIVE for r in reports):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_lift(args) -> int:
    group = invariants.parse_group(args.group)
    map_ = invariants.orbit_map(group)
    curve = _parse_curve(args)
    grid = curvedsl.Grid.dyadic(args.domain[0], args.domain[1], args.level)
    lift = lifting.lift_curve(group, map_, curve, grid, args.tol)
    if args.out:
        names = [f"x{j + 1}" for j in range(group.dim)]
        curvedsl.write_samples_csv(args.out, grid.points, lift.values, names)
    lines = [
        "tool: lift",
        f"group: {args.group}",
        f"curve: {args.curve if args.curve else f'csv:{args.csv}'}",
        f"domain: {_fmt(args.domain[0])}:{_fmt(args.domain[1])}",
        f"level: {args.level}",
        f"tol: {_fmt(args.tol)}",
        f"residual: {_fmt(lift.residual)}",
        f"max-step: {_fmt(lift.max_step)}",
        f"continuity-ok: {str(lift.continuity_ok).lower()}",
        f"swap-count: {len(lift.swap_log)}",
        f"unresolved-count: {len(lift.unresolved)}",
    ]
    for j, rep in enumerate(lift.reports):
        lines.append(f"coordinate[{j}].verdict: {rep.verdict}")
    for j, rep in enumerate(lift.reports):
        lines.extend(_prefixed_report(rep, f"coordinate[{j}].report."))
    _emit("\n".join(lines) + "\n", args.report)
    if args.strict and any(r.verdict == regcheck.INCONCLUSIVE for r in lift.reports):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_certify(args) -> int:
    lines = ["tool: certify"]
    reports = []
    if args.csv:
        t, cols, names = curvedsl.read_samples_csv(args.csv)
        domain = (float(t[0]), float(t[-1]))
        lines.append("source: csv")
        lines.append(f"columns: {cols.shape[1]}")
        for j in range(cols.shape[1]):
            rep = regcheck.certify_samples(cols[:, j], domain, args.levels)
            reports.append((names[j], rep))
    else:
        expr = curvedsl.parse_curve_expr(args.curve)
        lines.append("source: expr")
        lines.append(f"curve: {args.curve}")
        lines.append("columns: 1")
        rep = regcheck.certify(
            lambda pts: curvedsl.evaluate_expr(expr, pts),
            args.domain,
            levels=args.levels,
            base_level=max(1, args.level - args.levels + 1),
        )
        reports.append(("f", rep))
    for name, rep in reports:
        lines.append(f"column[{name}].verdict: {rep.verdict}")
    for name, rep in reports:
        lines.extend(_prefixed_report(rep, f"column[{name}].report."))
    _emit("\n".join(lines) + "\n", args.report)
    if args.strict and any(r.verdict == regcheck.INCONCLUSIVE for _, r in reports):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_kdata(args) -> int:
    group = invariants.parse_group(args.group)
    map_ = invariants.orbit_map(group)
    kd = invariants.compute_k(group, map_, seed=args.seed)
    lines = [
        "tool: kdata",
        f"group: {kd.group_label}",
        f"order: {kd.group_order}",
        f"dim: {group.dim}",
        f"invariant-degrees: {','.join(str(d) for d in map_.degrees)}",
        f"d: {kd.d_value}",
        f"k: {kd.k_value}",
        f"seed: {args.seed}",
        f"candidates-examined: {kd.candidates_examined}",
        f"summands: {len(kd.records)}",
    ]
    for i, rec in enumerate(kd.records):
        lines.append(f"summand[{i}].dim: {rec.dim}")
        lines.append(f"summand[{i}].v: {','.join(_fmt(x) for x in rec.v)}")
        lines.append(f"summand[{i}].isotropy-order: {rec.isotropy_order}")
        lines.append(f"summand[{i}].orbit-size: {rec.orbit_size}")
    _emit("\n".join(lines) + "\n", args.report)
    return EXIT_OK


def _make_probes(box, count: int):
    (a, b), (c, d) = box
    cx, cy = 0.5 * (a + b), 0.5 * (c + d)
    hx, hy = 0.45 * (b - a), 0.45 * (d - c)
    probes = []
    n_lines = max(count - 2, 1)
    for i in range(n_lines):
        phi = np.pi * i / n_lines
        dx, dy = hx * np.cos(phi), hy * np.sin(phi)
        probes.append((f"line-{i}", _line_probe(cx, cy, dx, dy)))
    if count >= 2:
        probes.append(("parabola-x", lambda t: np.array([cx + hx * t, cy + hy * (t * t - 0.5)])))
    if count >= 3:
        probes.append(("parabola-y", lambda t: np.array([cx + hx * (t * t - 0.5), cy + hy * t])))
    return probes[:count]


def _line_probe(cx, cy, dx, dy):
    return lambda t: np.array([cx + dx * t, cy + dy * t])


def cmd_harness(args) -> int:
    group = invariants.parse_group(args.group)
    map_ = invariants.orbit_map(group)
    gmap_sources = curvedsl.split_top_level(args.gmap, ";")
    if len(gmap_sources) != group.dim:
        raise OrbitLiftError(
            f"gmap needs {group.dim} components for {args.group}, got {len(gmap_sources)}"
        )
    gmap_exprs = [curvedsl.parse_curve_expr(s, variables=("u", "v")) for s in gmap_sources]
    box = tuple(_parse_domain(part) for part in args.box.split(","))

    def f(point):
        env = {"u": point[0], "v": point[1]}
        target = np.array([curvedsl.evaluate_with_env(e, env) for e in gmap_exprs])
        return map_.evaluate(target)

    probes = _make_probes(box, args.probes)
    grid = curvedsl.Grid.dyadic(-1.0, 1.0, args.level)
    rep = lifting.lipschitz_harness(group, map_, f, probes, grid, args.tol)
    lines = [
        "tool: harness",
        f"group: {args.group}",
        f"gmap: {args.gmap}",
        f"box: {args.box}",
        f"probes: {len(rep.probes)}",
        f"level: {args.level}",
        f"verdict: {rep.verdict}",
    ]
    for i, pr in enumerate(rep.probes):
        lines.append(f"probe[{i}].name: {pr.name}")
        lines.append(f"probe[{i}].lipschitz: {_fmt(pr.lipschitz_estimate)}")
        lines.append(f"probe[{i}].verdict: {pr.verdict}")
    _emit("\n".join(lines) + "\n", args.report)
    if args.strict and rep.verdict == lifting.LipschitzHarnessReport.INCONCLUSIVE:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_examples(args) -> int:
    lines = ["tool: examples", f"entries: {len(catalog.CATALOG)}"]
    for i, e in enumerate(catalog.CATALOG):
        lines.append(f"example[{i}].name: {e.name}")
        lines.append(f"example[{i}].curve: {','.join(e.components)}")
        lines.append(f"example[{i}].declared-class: {e.declared_class}")
        floor = "at-least " if e.at_least else ""
        lines.append(f"example[{i}].expected-verdict: {floor}{e.expected_verdict}")
        if e.flip_partner:
            lines.append(f"example[{i}].flip-partner: {e.flip_partner}")
        lines.append(f"example[{i}].note: {e.note}")
    _emit("\n".join(lines) + "\n", args.report)
    return EXIT_OK


class _Subparser(argparse.ArgumentParser):
    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self._negative_number_matcher = _NEGATIVE_VALUE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orbitlift",
        description="Root-branch selection and orbit-map lifting with regularity certificates",
    )
    parser._negative_number_matcher = _NEGATIVE_VALUE
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Subparser)

    def common(p, curve=False, group=False, needs_domain=False):
        p.add_argument("--tol", type=float, default=1e-10)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--levels", type=int, default=6, help="refinement levels examined by the certifier")
        p.add_argument("--strict", action="store_true")
        p.add_argument("--out", default=None, help="CSV output path")
        p.add_argument("--report", default=None, help="report output path (default: stdout)")
        if curve:
            p.add_argument("--curve", default=None, help="comma-separated component expressions")
            p.add_argument("--csv", default=None, help="curve samples CSV (header t,a1,...)")
            p.add_argument("--class", dest="declared_class", default="Cinf")
        if group:
            p.add_argument("--group", required=True, help='catalog group, e.g. "A:2", "I2:5"')
        if needs_domain:
            p.add_argument("--domain", type=_parse_domain, default=(-1.0, 1.0), metavar="a:b")
            p.add_argument("--level", type=int, default=8)

    p = sub.add_parser("roots", help="real roots of one polynomial")
    p.add_argument("--poly", required=True, help="comma-separated a1,...,an")
    common(p)
    p.set_defaults(func=cmd_roots)

    p = sub.add_parser("select", help="differentiable root-branch selection")
    common(p, curve=True, needs_domain=True)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("lift", help="lift an orbit-space curve")
    common(p, curve=True, group=True, needs_domain=True)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("certify", help="certify the regularity of samples or an expression")
    common(p, curve=True, needs_domain=True)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("kdata", help="invariant degrees and the constant k")
    common(p, group=True)
    p.set_defaults(func=cmd_kdata)

    p = sub.add_parser("harness", help="several-variable locally-Lipschitz probe harness")
    common(p, group=True, needs_domain=True)
    p.add_argument("--gmap", required=True, help="semicolon-separated map components in u,v")
    p.add_argument("--box", default="-1:1,-1:1", help="probe box, e.g. -1:1,-1:1")
    p.add_argument("--probes", type=int, default=7)
    p.set_defaults(func=cmd_harness)

    p = sub.add_parser("examples", help="list the built-in example catalog")
    common(p)
    p.set_defaults(func=cmd_examples)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NotHyperbolic, NotInImageAt, ToleranceViolation) as err:
        sys.stderr.write(f"error: {err}\n")
        return EXIT_DOMAIN
    except OrbitLiftError as err:
        sys.stderr.write(f"error: {err}\n")
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
