"""Command-line front end.

    bimetric eval METRIC --kind {christoffel,riemann,ricci,scalar} --point "2,0.7"
                 [--background METRIC] [--mode dual|fd] [--json]
    bimetric check NAME METRIC [METRIC ...] [--samples N] [--seed S] [--tol T] [--mode]
    bimetric suite [--dims 2,3] [--seed S] [--samples N] [--mode]
    bimetric manifest METRIC

METRIC is a manifest file, a built-in name or ``random:DIM:SEED[:ROUGHNESS]``.
Reports go to stdout, diagnostics to stderr.  Exit codes: 0 pass, 1 residual
failure, 2 parse error, 3 domain error, 4 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import catalog
from .checks import CHECKS, run_check, run_suite, suite_json
from .connection import MetricField, christoffel_relative, spd_inverse
from .curvature import ricci, riemann_relative
from .diff import DiffMode, require_compatible
from .errors import (
    BimetricError,
    ConfigurationError,
    DomainError,
    ExprSyntaxError,
    ManifestError,
    ShapeError,
)
from .expr import evaluate_constant
from .report import SCHEMA_VERSION
from .tensor import as_points

EXIT_PASS, EXIT_FAIL, EXIT_PARSE, EXIT_DOMAIN, EXIT_CONFIG = 0, 1, 2, 3, 4

KIND_LABELS = {
    "christoffel": ("Gamma", "[a][b][c] = Gamma^a_bc"),
    "riemann": ("R", "[l][i][j][k] = R^l_ijk"),
    "ricci": ("Ric", "[i][k] = R_ik = R^l_ilk"),
}


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (ExprSyntaxError, ManifestError)):
        return EXIT_PARSE
    if isinstance(exc, DomainError):
        return EXIT_DOMAIN
    return EXIT_CONFIG


def load_metric(spec: str) -> MetricField:
    try:
        return catalog.resolve(spec).to_metric()
    except (ExprSyntaxError, ManifestError, ShapeError) as exc:
        raise ManifestError(f"{spec}: {exc}") from exc


def parse_point(text: str) -> np.ndarray:
    """Comma-separated coordinates; each entry may be a constant expression such as pi/3."""
    out = []
    start = 0
    for e in text.split(","):
        try:
            out.append(evaluate_constant(e))
        except ExprSyntaxError as exc:
            # report the offset within the whole --point string
            raise type(exc)(f"bad point {text!r}: {exc.message}", start + exc.offset, text) from exc
        start += len(e.encode()) + 1
    return np.array(out)


def _format_components(symbol: str, names, data: np.ndarray, n_upper: int) -> list[str]:
    lines = []
    for idx in np.ndindex(*data.shape):
        up = ",".join(names[i] for i in idx[:n_upper])
        low = ",".join(names[i] for i in idx[n_upper:])
        label = symbol + (f"^{up}" if up else "") + (f"_{low}" if low else "")
        lines.append(f"{label} = {float(data[idx])!r}")
    return lines


def cmd_eval(args) -> int:
    m = load_metric(args.metric)
    g = load_metric(args.background) if args.background else m.delta()
    require_compatible(g, m)
    pt = as_points(parse_point(args.point), m.dimension)
    mode = DiffMode(args.mode)
    names = m.chart.coordinate_names
    if args.kind == "christoffel":
        data, n_upper = christoffel_relative(g, m, pt, mode).data, 1
    elif args.kind == "riemann":
        data, n_upper = riemann_relative(g, m, pt, mode).data, 1
    elif args.kind == "ricci":
        data, n_upper = ricci(g, m, pt, mode).data, 0
    else:
        ric = ricci(g, m, pt, mode).data
        data, n_upper = np.asarray(np.einsum("ik,ik->", spd_inverse(m.values(pt), m.name), ric)), 0

    if args.json:
        out = {
            "schema": SCHEMA_VERSION,
            "kind": args.kind,
            "metric": m.name,
            "background": g.name,
            "mode": mode.value,
            "coordinates": list(names),
            "point": [float(c) for c in pt],
            "components": data.tolist(),
        }
        if args.kind in KIND_LABELS:
            out["index_order"] = KIND_LABELS[args.kind][1]
        print(json.dumps(out, indent=2, sort_keys=True))
    elif args.kind == "scalar":
        print(f"scalar = {float(data)!r}")
    else:
        symbol, order = KIND_LABELS[args.kind]
        print(f"# {args.kind} of {m.name} relative to {g.name}; index order {order}")
        print("\n".join(_format_components(symbol, names, data, n_upper)))
    return EXIT_PASS


def cmd_check(args) -> int:
    metrics = [load_metric(s) for s in args.metrics]
    report = run_check(args.name, metrics, samples=args.samples, seed=args.seed, tol=args.tol, mode=args.mode)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return EXIT_PASS if report.passed else EXIT_FAIL


def _parse_dims(text: str) -> list[int]:
    try:
        return [int(d) for d in text.split(",") if d.strip()]
    except ValueError:
        raise ConfigurationError(f"--dims expects comma-separated integers, got {text!r}") from None


def cmd_suite(args) -> int:
    report = run_suite(_parse_dims(args.dims), seed=args.seed, mode=args.mode, samples=args.samples)
    print(suite_json(report))
    if not report["passed"]:
        for r in report["reports"]:
            if not r["passed"]:
                print(f"FAILED {r['check_name']} {','.join(r['metric_names'])}: "
                      f"max_residual {r['max_residual']:.3e} > {r['tolerance']:.3e}", file=sys.stderr)
    return EXIT_PASS if report["passed"] else EXIT_FAIL


def cmd_manifest(args) -> int:
    try:
        print(catalog.resolve(args.metric).to_json())
    except ExprSyntaxError as exc:
        raise ManifestError(f"{args.metric}: {exc}") from exc
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bimetric", description="Bimetric tensor calculus checks.")
    sub = p.add_subparsers(dest="command", required=True)
    modes = [m.value for m in DiffMode]

    e = sub.add_parser("eval", help="evaluate a tensor at a point")
    e.add_argument("metric")
    e.add_argument("--background", help="background metric g (default: the chart's identity metric)")
    e.add_argument("--kind", required=True, choices=["christoffel", "riemann", "ricci", "scalar"])
    e.add_argument("--point", required=True, help='comma-separated coordinates, e.g. "2,0.7" or "pi/3,1"')
    e.add_argument("--mode", default="dual", choices=modes)
    e.add_argument("--json", action="store_true")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("check", help="run one residual check; JSON report on stdout")
    c.add_argument("name", choices=list(CHECKS))
    c.add_argument("metrics", nargs="+")
    c.add_argument("--samples", type=int, default=50)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--tol", type=float, default=None, help="base tolerance (default depends on check and mode)")
    c.add_argument("--mode", default="dual", choices=modes)
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("suite", help="run every check over builtins and random metrics")
    s.add_argument("--dims", default="2,3")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--samples", type=int, default=20)
    s.add_argument("--mode", default="dual", choices=modes)
    s.set_defaults(func=cmd_suite)

    mf = sub.add_parser("manifest", help="print the JSON manifest of a built-in or random metric")
    mf.add_argument("metric")
    mf.set_defaults(func=cmd_manifest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BimetricError as exc:
        print(f"bimetric: error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
