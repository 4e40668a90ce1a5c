"""Command-line front end.

Subcommands
    sweep <config>        run a configured h-sweep, write CSV (+ figures)
    asymptote             print an analytic two/three-term eigenvalue
    quasimode <config>    build trial states per h and report residuals
    fit <csv>             power-law fit of a sweep CSV column, JSON out
    gaps <csv>            count spectral gaps of an eigenvalue summary
    landau-check          run the magnetic lower-bound property check

Exit status is 0 iff every check the invocation configures passes.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .errors import MagwellError
from .field import uniform_field
from .geometry import flat_metric
from .lab import (
    ExperimentConfig,
    count_gaps,
    default_config_text,
    exponent_fit,
    fit_powers,
    parse_config,
    read_sweep_csv,
    run_sweep,
)
from .modelspectra import (
    groundstate_two_term,
    lambda_band,
    miniwell_eigenvalue_k0,
)
from .operator import GridSpec, montgomery_check


def _emit(data, stream) -> None:
    json.dump(data, stream, indent=2, sort_keys=True)
    stream.write("\n")


def _cmd_sweep(args, out, err) -> int:
    if args.print_config:
        out.write(default_config_text())
        return 0
    if args.config is None:
        err.write("sweep: a config file is required (or --print-config)\n")
        return 2
    config = parse_config(args.config)
    records = run_sweep(config, log=lambda line: out.write(line + "\n"))
    failures = [r for r in records if not r.ok]
    for rec in failures:
        err.write(f"h={rec.h:g} failed: {rec.error}\n")
    if args.figures:
        from .figures import render_residual_figure, render_sweep_figure

        base = config.output.rsplit(".", 1)[0]
        ok_pairs = [(r.h, r.eigenvalues[0]) for r in records
                    if r.ok and r.eigenvalues]
        fit = None
        if len(ok_pairs) >= 2:
            fit = fit_powers(ok_pairs, powers=(1, 2))
        out.write(f"figure: {render_sweep_figure(records, base + '.png', fit)}\n")
        res_pairs = [(r.h, r.residual) for r in records
                     if r.ok and r.residual is not None and r.residual > 0]
        if len(res_pairs) >= 3:
            rfit = exponent_fit(res_pairs)
            out.write(
                "figure: "
                f"{render_residual_figure(records, base + '_residual.png', rfit)}\n"
            )
    return 1 if failures else 0


def _cmd_asymptote(args, out, err) -> int:
    if args.kind == "band":
        result = lambda_band(args.h, args.k, args.b0, args.beta2, args.R)
    elif args.kind == "groundstate":
        result = groundstate_two_term(args.h, args.b0, args.mu0)
    else:
        result = miniwell_eigenvalue_k0(args.h, args.j, args.b0, args.mu0, args.mu2)
    _emit(
        {
            "kind": args.kind,
            "h": result.h,
            "value": result.value,
            "terms": {f"{p:g}": c for p, c in sorted(result.term_breakdown.items())},
        },
        out,
    )
    return 0


def _cmd_quasimode(args, out, err) -> int:
    from .lab import _quasimode_coefficients, build_scenario
    from .operator import assemble, residual_norm
    from .oscillator import assemble_trial_state

    config = parse_config(args.config)
    qm = _quasimode_coefficients(config)
    rows = []
    status = 0
    for h in config.h_values:
        try:
            field, metric, gauge = build_scenario(config)
            grid = GridSpec.for_box(
                config.box_s_min, config.box_s_max, config.box_t_min,
                config.box_t_max, h, field.b0,
                factor=config.factor, min_points=config.min_points,
            )
            op = assemble(h, field, metric, gauge, grid)
            bundle = assemble_trial_state(
                qm, h=h, beta=config.beta, x=config.center, grid=grid, metric=metric
            )
            residual = residual_norm(op, bundle)
            rows.append((h, bundle.lambda_h, residual, bundle.mass_loss))
            out.write(
                f"h={h:g}: lambda={bundle.lambda_h:.8g} residual={residual:.4e}\n"
            )
        except MagwellError as exc:
            status = 1
            err.write(f"h={h:g} failed: {type(exc).__name__}: {exc}\n")
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write("h,lambda_h,residual,mass_loss\n")
            for h, lam, res, loss in rows:
                f.write(f"{h:.17g},{lam:.17g},{res:.17g},{loss:.17g}\n")
    return status


def _cmd_fit(args, out, err) -> int:
    records = read_sweep_csv(args.csv)
    usable = [r for r in records if r.ok]
    if args.column.startswith("lambda"):
        index = int(args.column[len("lambda"):] or 0)
        pairs = [(r.h, r.eigenvalues[index]) for r in usable
                 if len(r.eigenvalues) > index]
    elif args.column == "residual":
        pairs = [(r.h, r.residual) for r in usable if r.residual is not None]
    elif args.column == "gap":
        pairs = [(r.h, r.eigenvalues[1] - r.eigenvalues[0]) for r in usable
                 if len(r.eigenvalues) >= 2]
    else:
        err.write(f"fit: unknown column {args.column!r}\n")
        return 2
    if args.exponent:
        report = exponent_fit(pairs)
    else:
        powers = tuple(float(tok) for tok in args.powers.split(","))
        report = fit_powers(pairs, powers)
    payload = dataclasses.asdict(report)
    payload["column"] = args.column
    payload["n_samples"] = len(pairs)
    _emit(payload, out)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as f:
            _emit(payload, f)
    return 0


def _cmd_gaps(args, out, err) -> int:
    import csv as _csv

    with open(args.csv, newline="", encoding="utf-8") as f:
        reader = _csv.DictReader(f)
        if reader.fieldnames is None or "eigenvalue" not in reader.fieldnames:
            err.write(f"gaps: {args.csv} has no 'eigenvalue' column\n")
            return 2
        eigenvalues = sorted(float(row["eigenvalue"]) for row in reader)
    alpha, beta = (float(tok) for tok in args.interval.split(","))
    report = count_gaps(eigenvalues, (alpha, beta), args.min_gap)
    _emit(
        {
            "count": report.count,
            "gaps": [list(g) for g in report.gaps],
            "min_gap": report.min_gap,
            "interval": [alpha, beta],
        },
        out,
    )
    if args.expect_at_least is not None and report.count < args.expect_at_least:
        err.write(
            f"gaps: expected at least {args.expect_at_least}, found {report.count}\n"
        )
        return 1
    return 0


def _cmd_landau_check(args, out, err) -> int:
    metric = flat_metric()
    field = uniform_field(args.b0, band=metric.band)
    grid = GridSpec.for_box(-3.0, 3.0, -1.5, 1.5, args.h, args.b0)
    report = montgomery_check(
        field, metric, args.h, grid, n_trials=args.trials, seed=args.seed
    )
    _emit(
        {
            "passed": report.passed,
            "min_slack_rel": report.min_slack_rel,
            "eps_disc": report.eps_disc,
            "saturation": report.saturation,
            "n_trials": report.n_trials,
        },
        out,
    )
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="magwell",
        description="Spectral experiments for magnetic wells along curves.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a configured h-sweep")
    p.add_argument("config", nargs="?", help="INI config file")
    p.add_argument("--print-config", action="store_true",
                   help="print default settings and exit")
    p.add_argument("--figures", action="store_true",
                   help="render PNGs next to the CSV output")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("asymptote", help="analytic eigenvalue expansions")
    p.add_argument("--kind", choices=("band", "groundstate", "miniwell"),
                   default="band")
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--j", type=int, default=0)
    p.add_argument("--b0", type=float, default=1.0)
    p.add_argument("--beta2", type=float, default=2.0)
    p.add_argument("--R", type=float, default=0.0)
    p.add_argument("--mu0", type=float, default=2.0)
    p.add_argument("--mu2", type=float, default=2.0)
    p.set_defaults(func=_cmd_asymptote)

    p = sub.add_parser("quasimode", help="trial-state residuals per h")
    p.add_argument("config", help="INI config file")
    p.add_argument("--output", help="CSV path for the residual table")
    p.set_defaults(func=_cmd_quasimode)

    p = sub.add_parser("fit", help="power-law fit of a sweep CSV column")
    p.add_argument("csv", help="sweep CSV produced by the sweep command")
    p.add_argument("--powers", default="1,2",
                   help="comma-separated exponents, e.g. 1,2,2.5")
    p.add_argument("--column", default="lambda0",
                   help="lambda<i>, gap, or residual")
    p.add_argument("--exponent", action="store_true",
                   help="log-log slope fit instead of coefficients")
    p.add_argument("--json", help="also write the report to this file")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("gaps", help="count spectral gaps in a summary CSV")
    p.add_argument("csv", help="CSV with an 'eigenvalue' column")
    p.add_argument("--interval", required=True, help="a,b")
    p.add_argument("--min-gap", type=float, required=True, dest="min_gap")
    p.add_argument("--expect-at-least", type=int, default=None)
    p.set_defaults(func=_cmd_gaps)

    p = sub.add_parser("landau-check", help="magnetic lower-bound property")
    p.add_argument("--h", type=float, default=0.1)
    p.add_argument("--b0", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_landau_check)

    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, out, err)
    except MagwellError as exc:
        err.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1
    except OSError as exc:
        err.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
