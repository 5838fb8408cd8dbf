"""Command line front end.

    python3 -m qgnls spectrum --graph star_halflines:n=3 --truncations 10,20,40,80
    python3 -m qgnls solve --graph tadpole --mass 1 --p 8
    python3 -m qgnls phase --p 8 --ell-grid -0.3:-1e-6:log
    python3 -m qgnls verify --state out/state.txt
    python3 -m qgnls gn --graph star_halflines:n=2 --p 8
    python3 -m qgnls golden --allow-update

Exit status: 0 when every invoked check passes, 1 on a failed check, 2 on a
usage or input error.  Artifacts go to --outdir, defaulting to $QGNLS_OUTDIR
or the current directory.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import golden, phase, solver, spectra, state_io, verify
from .functions import empirical_gn_constant
from .graph import GraphError, MetricGraph, parse_catalog_spec, parse_graph

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def load_graph(spec: str) -> MetricGraph:
    path = Path(spec)
    if path.is_file():
        return parse_graph(path.read_text(encoding="utf-8"), name=path.stem)
    return parse_catalog_spec(spec)


def float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from exc


def ell_grid(text: str) -> np.ndarray:
    """``a:b:log[:n]`` or ``a:b:lin[:n]`` (default n = 10)."""
    parts = text.split(":")
    if len(parts) not in (3, 4) or parts[2] not in ("log", "lin"):
        raise argparse.ArgumentTypeError("grid must look like a:b:log[:n] or a:b:lin[:n]")
    try:
        a, b = float(parts[0]), float(parts[1])
        n = int(parts[3]) if len(parts) == 4 else 10
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if n < 1:
        raise argparse.ArgumentTypeError("grid needs at least one point")
    if parts[2] == "lin":
        return np.linspace(a, b, n)
    if a == 0 or b == 0 or (a > 0) != (b > 0):
        raise argparse.ArgumentTypeError("log grid endpoints must be nonzero with equal sign")
    return math.copysign(1.0, a) * np.logspace(math.log10(abs(a)), math.log10(abs(b)), n)


def center_arg(text: str):
    if ":" in text:
        k, s = text.split(":", 1)
        return int(k), float(s)
    return text


def _outdir(args) -> Path:
    out = Path(args.outdir or os.environ.get("QGNLS_OUTDIR") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


# ------------------------------------------------------------ subcommands


def cmd_spectrum(args) -> int:
    g = load_graph(args.graph)
    if args.vary:
        key, _, vals = args.vary.partition("=")
        sizes = float_list(vals)
        base = args.graph.partition(":")[2]

        def build(s, key=key.strip()):
            spec = args.graph.partition(":")[0] + ":" + ",".join(
                x for x in [base, f"{key}={int(s) if float(s).is_integer() else s}"] if x)
            return parse_catalog_spec(spec)
        res = spectra.assumption1_probe(build, sizes, args.h, args.far_bc, args.leaf_bc, args.seed)
        label = key.strip()
    else:
        res = spectra.assumption1_probe(g, args.truncations, args.h, args.far_bc, args.leaf_bc, args.seed)
        label = "truncation"
    text = res.to_csv(label)
    out = _outdir(args) / (args.output or "spectrum.csv")
    out.write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    print(f"# exponent {res.exponent:.6f}  extrapolated {res.limit:.6e} +- {res.limit_err:.1e}  verdict: {res.verdict}")
    print(f"# eigen residual tolerance 1e-08; max residual {max(r[2] for r in res.rows):.3e}")
    return EXIT_OK if max(r[2] for r in res.rows) <= 1e-8 else EXIT_FAIL


def cmd_solve(args) -> int:
    g = load_graph(args.graph)
    p = args.p if args.p is not None else (g.p if g.p is not None else 8.0)
    centers = [center_arg(c) for c in args.center] if args.center else None
    try:
        st, trace = solver.continuation_to_mass(
            g, args.mass, args.rho, p, lam_grid=args.lambda_grid, h=args.h, truncation=args.truncate,
            centers=centers, far_bc=args.far_bc, leaf_bc=args.leaf_bc)
    except solver.MassNotBracketed as exc:
        print(f"solve failed: {exc}", file=sys.stderr)
        if exc.mu_range:
            print(f"achieved mass range {exc.mu_range[0]:.6g} .. {exc.mu_range[1]:.6g}", file=sys.stderr)
        return EXIT_FAIL
    checks = verify.verify_state(st, mu_target=args.mass)
    out = _outdir(args)
    stem = args.output or "state"
    state_io.save_state(st, out / f"{stem}.txt", extra={"mu_target": float(args.mass), "seed": args.seed})
    rep = verify.report(checks)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda", "mu", "newton_iterations", "residual"])
    for e in trace.entries:
        w.writerow([repr(e.lam), repr(e.mu), e.iterations, f"{e.residual:.3e}"])
    (out / f"{stem}_trace.csv").write_text(buf.getvalue(), encoding="utf-8")
    (out / f"{stem}_report.txt").write_text(rep, encoding="utf-8")
    print(f"lambda {st.lam!r}  mu {st.mu!r}  energy {st.energy!r}  center {st.meta.get('center')}")
    sys.stdout.write(rep)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def phase_rows(p, m, rho, levels):
    prm = phase.PhaseParams(p, m, rho)
    rows = []
    for ell in levels:
        lvl = phase.classify_level(float(ell), prm)
        T = N = math.nan
        if lvl.cls in (phase.LevelClass.POSITIVE_PERIODIC, phase.LevelClass.SIGN_CHANGING):
            T = phase.period(ell, prm)
        if lvl.cls is phase.LevelClass.POSITIVE_PERIODIC:
            N = phase.mass_over_period(ell, prm)
        rows.append((float(ell), lvl.cls.value, lvl.v_minus, lvl.v_plus, T, N))
    return rows


def cmd_phase(args) -> int:
    rows = phase_rows(args.p, args.m, args.rho, args.ell_grid)
    buf = io.StringIO()
    buf.write("# quadrature relative tolerance 1e-09\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ell", "class", "v_minus", "v_plus", "T", "N"])
    fmt = lambda x: "" if x is None else repr(float(x))
    for r in rows:
        w.writerow([repr(r[0]), r[1], fmt(r[2]), fmt(r[3]), fmt(r[4]), fmt(r[5])])
    text = buf.getvalue()
    (_outdir(args) / (args.output or "phase.csv")).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        st, meta = state_io.load_state(args.state)
    except (OSError, ValueError, KeyError, GraphError) as exc:
        raise UsageError(f"cannot read state file: {exc}") from exc
    target = meta.get("mu_target")
    checks = verify.verify_state(st, mu_target=target, morse_check=not args.skip_morse)
    rep = verify.report(checks)
    sys.stdout.write(rep)
    if args.output:
        (_outdir(args) / args.output).write_text(rep, encoding="utf-8")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def cmd_gn(args) -> int:
    g = load_graph(args.graph)
    k = empirical_gn_constant(g, args.p, args.samples, args.seed, args.h, args.truncate)
    text = (f"graph {args.graph}\np {args.p!r}\nsamples {args.samples}\nseed {args.seed}\nh {args.h!r}\n"
            f"empirical_lower_bound {k!r}\n")
    (_outdir(args) / (args.output or "gn.txt")).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_golden(args) -> int:
    if not args.allow_update:
        raise UsageError("golden files are only rewritten with --allow-update")
    target = Path(args.outdir) if args.outdir else golden.golden_dir()
    for path in golden.regenerate(target, allow_update=True):
        print(path)
    return EXIT_OK


# ------------------------------------------------------------ parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qgnls", description="NLS stationary states on metric graphs")
    ap.add_argument("--outdir", help="output directory (default $QGNLS_OUTDIR or .)")
    ap.add_argument("--seed", type=int, default=0)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--outdir", default=argparse.SUPPRESS)
        sp.add_argument("--seed", type=int, default=argparse.SUPPRESS)
        sp.add_argument("--output", help="output file name (or stem)")

    sp = sub.add_parser("spectrum", help="bottom of the Kirchhoff spectrum along a size schedule")
    common(sp)
    sp.add_argument("--graph", required=True)
    sp.add_argument("--truncations", type=float_list, default=[10.0, 20.0, 40.0, 80.0])
    sp.add_argument("--vary", help="catalog parameter schedule instead, e.g. depth=4,5,6")
    sp.add_argument("--h", type=float, default=0.05)
    sp.add_argument("--far-bc", choices=[spectra.DIRICHLET, spectra.NEUMANN], default=spectra.DIRICHLET)
    sp.add_argument("--leaf-bc", choices=[spectra.DIRICHLET, spectra.NEUMANN], default=spectra.NEUMANN)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("solve", help="positive state with prescribed mass")
    common(sp)
    sp.add_argument("--graph", required=True)
    sp.add_argument("--mass", type=float, required=True)
    sp.add_argument("--rho", type=float, default=1.0)
    sp.add_argument("--p", type=float)
    sp.add_argument("--h", type=float)
    sp.add_argument("--truncate", type=float)
    sp.add_argument("--lambda-grid", type=float_list)
    sp.add_argument("--center", action="append", help="vertex id or edge:arclength (repeatable)")
    sp.add_argument("--far-bc", choices=[spectra.DIRICHLET, spectra.NEUMANN], default=spectra.DIRICHLET)
    sp.add_argument("--leaf-bc", choices=[spectra.DIRICHLET, spectra.NEUMANN], default=spectra.NEUMANN)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("phase", help="period and mass per period along a level grid")
    common(sp)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--m", type=float, default=1.0)
    sp.add_argument("--rho", type=float, default=1.0)
    sp.add_argument("--ell-grid", type=ell_grid, default="-0.3:-1e-6:log")
    sp.set_defaults(func=cmd_phase)

    sp = sub.add_parser("verify", help="re-run all checks on a saved state")
    common(sp)
    sp.add_argument("--state", required=True)
    sp.add_argument("--skip-morse", action="store_true")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("gn", help="empirical Gagliardo-Nirenberg constant")
    common(sp)
    sp.add_argument("--graph", required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--samples", type=int, default=200)
    sp.add_argument("--h", type=float, default=0.05)
    sp.add_argument("--truncate", type=float)
    sp.set_defaults(func=cmd_gn)

    sp = sub.add_parser("golden", help="regenerate reference value files")
    common(sp)
    sp.add_argument("--allow-update", action="store_true")
    sp.set_defaults(func=cmd_golden)
    return ap


def _glue_negative_values(argv):
    # "--ell-grid -0.3:-1e-6:log" would otherwise be read as an unknown option
    out = []
    it = iter(argv)
    for a in it:
        if a in ("--ell-grid", "--lambda-grid", "--truncations"):
            nxt = next(it, None)
            out.append(a if nxt is None else f"{a}={nxt}")
        else:
            out.append(a)
    return out


def main(argv=None) -> int:
    argv = _glue_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "p", None) is not None and args.command == "phase" and not args.p > 2:
            raise UsageError("--p must exceed 2")
        if args.command == "solve" and not args.mass > 0:
            raise UsageError("--mass must be positive")
        return args.func(args)
    except UsageError as exc:
        print(f"qgnls: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GraphError, FileNotFoundError) as exc:
        print(f"qgnls: input error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
