"""Command-line front end.

Subcommands::

    analyze   collision geometry, expansion coefficients, scaling constant
    predict   exit-point prediction for one entry point
    simulate  direct integration with cylinder entry/exit detection
    sweep     prediction-vs-simulation table over a grid of entry points
              (or an eps-family study with --eps-list)
    figure    canned study tables (fig7, fig8, fig9)
    check     standing-assumption verdicts for one entry point

Exit codes: 0 success (including FAIL verdicts from ``check``), 1 domain
errors (no collision, uncovered case, no exit in domain, ...), 2 usage
errors.  Every subcommand that was given ``--out`` writes that file even
when a domain error occurs (header-only body, error echoed into the
``.meta.json`` sidecar), and always by write-then-rename.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import harness, odeint, polar, spectral
from ._version import __version__
from .entry_exit import predict_exit
from .errors import DomainError, FastSlowError, StepSizeUnderflowError, SystemDefinitionError
from .harness import _csv_body, _write_atomic, _write_sidecar  # shared formatting
from .systems import FastSlowSystem, load_system, make_builtin

_BUILTINS = ("one_way_coupled", "eps_coupled", "nonlinear")


def _fmt(value) -> str:
    """Human-readable number (full precision only in CSV output)."""
    if value is None:
        return "(none)"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _cell(value) -> str:
    """Machine CSV cell: 17 significant digits, empty for None."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _add_system_flags(sub: argparse.ArgumentParser) -> None:
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument(
        "--system",
        choices=_BUILTINS,
        help="builtin system name",
    )
    group.add_argument(
        "--config",
        metavar="PATH",
        help="path to a system config file (YAML schema, see load_system)",
    )
    sub.add_argument(
        "--a",
        type=float,
        default=None,
        help="parameter a of the builtin 'nonlinear' system (default 4)",
    )


def _resolve_system(args: argparse.Namespace) -> FastSlowSystem:
    if args.config is not None:
        if args.a is not None:
            raise SystemDefinitionError("--a applies only to --system nonlinear")
        with open(args.config, "r", encoding="utf-8") as fh:
            return load_system(fh.read())
    if args.system == "nonlinear":
        return make_builtin("nonlinear", a=args.a if args.a is not None else 4.0)
    if args.a is not None:
        raise SystemDefinitionError("--a applies only to --system nonlinear")
    return make_builtin(args.system)


def _parse_init(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"--init expects 'z1,z2', got {text!r}")
    return (float(parts[0]), float(parts[1]))


def _parse_grid(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"--grid expects 'lo:hi:n', got {text!r}")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    return harness.default_sweep_grid(lo, hi, n)


def _parse_eps_list(text: str):
    return tuple(float(v) for v in text.split(","))


def _write_error_out(out: Optional[str], header, metadata: dict, exc: Exception) -> None:
    """Header-only CSV plus an error-carrying sidecar (domain errors)."""
    if not out:
        return
    meta = dict(metadata)
    meta["error"] = {"type": type(exc).__name__, "message": str(exc)}
    _write_atomic(out, _csv_body(header, []))
    _write_sidecar(out, meta)


def _dispatch_verdict(analysis) -> str:
    if abs(analysis.lambda_value - 1.0) > polar.LAMBDA_ONE_TOL:
        return "trans"
    if analysis.z0_invariant and analysis.s0_invariant:
        return "ambiguous (both branches invariant)"
    if analysis.z0_invariant:
        return "trans"
    if analysis.s0_invariant:
        return "invar"
    return "uncovered (no balance equation applies)"


# -- subcommands ---------------------------------------------------------


def _cmd_analyze(args: argparse.Namespace) -> int:
    system = _resolve_system(args)
    header = ("key", "value")
    meta = {"kind": "analyze", "system": system.name, "params": dict(system.params),
            "version": __version__}
    try:
        analysis = polar.analyze(system)
        xi_star, _ = spectral.eigenvalues_xi(system, analysis.x_star)
        x_plus, x_minus = spectral.find_eigenvalue_zeros(system)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _write_error_out(args.out, header, meta, exc)
        return 1
    verdict = _dispatch_verdict(analysis)

    print(f"system: {system.name}")
    if system.params:
        print(f"params: {system.params}")
    print(f"x_star: {_fmt(analysis.x_star)}")
    print(f"theta_star: {_fmt(analysis.theta_star)}")
    if len(analysis.theta_star_candidates) > 1:
        cands = ", ".join(_fmt(c) for c in analysis.theta_star_candidates)
        print(f"theta_star_candidates: {cands}")
    print(f"xi_star: {_fmt(xi_star)}")
    print(f"x_plus: {_fmt(x_plus)}")
    print(f"x_minus: {_fmt(x_minus)}")
    print(f"alpha: {_fmt(analysis.alpha)}")
    print(f"beta: {_fmt(analysis.beta)}")
    print(f"gamma: {_fmt(analysis.gamma)}")
    print(f"coef_delta: {_fmt(analysis.coef_delta)}")
    print(f"lambda: {_fmt(analysis.lambda_value)}")
    print(f"S0 invariant: {_fmt(analysis.s0_invariant)}")
    print(f"Z0 invariant: {_fmt(analysis.z0_invariant)}")
    print(f"dispatch for x0 < x_star: {verdict}")
    if analysis.alternate is not None:
        alt = analysis.alternate
        print(
            "alternate angle "
            f"{_fmt(alt['theta_star'])}: alpha={_fmt(alt['alpha'])} "
            f"beta={_fmt(alt['beta'])} gamma={_fmt(alt['gamma'])} "
            f"coef_delta={_fmt(alt['coef_delta'])} lambda={_fmt(alt['lambda_value'])}"
        )
    print("corollary checks:")
    for line in analysis.corollary_report.to_text().splitlines():
        print(f"  {line}")

    if args.out:
        pairs = [
            ("x_star", analysis.x_star),
            ("theta_star", analysis.theta_star),
            ("xi_star", xi_star),
            ("x_plus", x_plus),
            ("x_minus", x_minus),
            ("alpha", analysis.alpha),
            ("beta", analysis.beta),
            ("gamma", analysis.gamma),
            ("coef_delta", analysis.coef_delta),
            ("lambda", analysis.lambda_value),
            ("s0_invariant", analysis.s0_invariant),
            ("z0_invariant", analysis.z0_invariant),
            ("dispatch", verdict),
        ]
        if analysis.alternate is not None:
            for key in ("theta_star", "alpha", "beta", "gamma", "coef_delta",
                        "lambda_value"):
                pairs.append((f"alternate_{key}", analysis.alternate[key]))
        for check in analysis.corollary_report.checks:
            pairs.append((f"corollary_{check.name}", check.passed))
        _write_atomic(args.out, _csv_body(header, [(k, _cell(v)) for k, v in pairs]))
        _write_sidecar(args.out, meta)
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    system = _resolve_system(args)
    header = ("x0", "case", "x_tilde", "x1", "lambda",
              "s0_invariant", "z0_invariant", "residual")
    meta = {"kind": "predict", "system": system.name, "params": dict(system.params),
            "x0": args.x0, "version": __version__}
    try:
        pred = predict_exit(system, args.x0)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _write_error_out(args.out, header, meta, exc)
        return 1
    print(f"system: {system.name}")
    print(f"x0: {_fmt(pred.x0)}")
    print(f"case: {pred.case}")
    if pred.x_tilde is not None:
        print(f"x_tilde: {_fmt(pred.x_tilde)}")
    print(f"x1: {pred.x1:.10f}")
    print(f"lambda: {_fmt(pred.lambda_used)}")
    print(f"S0 invariant: {_fmt(pred.invariance_flags[0])}")
    print(f"Z0 invariant: {_fmt(pred.invariance_flags[1])}")
    print(f"residual: {_fmt(pred.residual)}")
    if args.out:
        row = (
            _cell(pred.x0), pred.case, _cell(pred.x_tilde), _cell(pred.x1),
            _cell(pred.lambda_used), _cell(pred.invariance_flags[0]),
            _cell(pred.invariance_flags[1]), _cell(pred.residual),
        )
        _write_atomic(args.out, _csv_body(header, [row]))
        _write_sidecar(args.out, meta)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    system = _resolve_system(args)
    init = (args.x0, args.init[0], args.init[1])
    meta = {
        "kind": "simulate", "system": system.name, "params": dict(system.params),
        "init": list(init), "eps": args.eps, "cylinder_radius": args.delta,
        "rtol": args.rtol, "atol": args.atol, "x_stop": args.x_stop,
        "version": __version__,
    }
    header = ("t", "x", "z1", "z2", "r", "theta", "log_r", "event")
    try:
        entry, exit_event, trace = odeint.detect_exit(
            system, init, args.eps,
            cylinder_radius=args.delta, rtol=args.rtol, atol=args.atol,
            x_stop=args.x_stop,
        )
    except (DomainError, StepSizeUnderflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        _write_error_out(args.out, header, meta, exc)
        return 1
    print(f"system: {system.name}  eps: {_fmt(args.eps)}  delta: {_fmt(args.delta)}")
    print(f"init: x0={_fmt(init[0])} z1={_fmt(init[1])} z2={_fmt(init[2])}")
    print(f"backend: {trace.backend}  mode: {trace.mode}")
    print(
        f"entry: t={_fmt(entry.t_event)} x={_fmt(entry.x_event)} "
        f"r={_fmt(entry.r)} theta={_fmt(entry.theta)}"
    )
    print(
        f"exit:  t={_fmt(exit_event.t_event)} x={_fmt(exit_event.x_event)} "
        f"r={_fmt(exit_event.r)} theta={_fmt(exit_event.theta)}"
    )
    print(f"steps: {trace.n_accepted} accepted, {trace.n_rejected} rejected")
    print(f"status: {trace.status}")
    if args.out:
        trace.to_csv(args.out)
        _write_sidecar(args.out, meta)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    system = _resolve_system(args)
    if args.eps_list is not None:
        if args.x0 is None:
            raise ValueError("--eps-list requires --x0")
        header = ("eps", "x1_sim", "error")
        meta = {"kind": "eps_family", "system": system.name}
        try:
            result = harness.eps_family(
                system, args.x0, args.init, args.eps_list,
                cylinder_radius=args.delta, rtol=args.rtol, atol=args.atol,
            )
        except DomainError as exc:
            print(f"error: {exc}", file=sys.stderr)
            _write_error_out(args.out, header, meta, exc)
            return 1
        for row in result.rows:
            suffix = f"  [{row.error}]" if row.error else ""
            print(f"eps={_fmt(row.eps)}  x1_sim={_fmt(row.x1_simulated)}{suffix}")
        if args.out:
            result.to_csv(args.out)
        return 0

    if args.eps is None:
        raise ValueError("sweep requires --eps (or --eps-list)")
    grid = args.grid if args.grid is not None else harness.default_sweep_grid()
    header = ("x0", "case", "x1_pred", "x1_sim", "abs_err", "error")
    meta = {"kind": "sweep", "system": system.name}
    try:
        result = harness.sweep(
            system, grid, args.eps, args.init,
            cylinder_radius=args.delta, rtol=args.rtol, atol=args.atol,
        )
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _write_error_out(args.out, header, meta, exc)
        return 1
    for row in result.rows:
        suffix = f"  [{row.error}]" if row.error else ""
        print(
            f"x0={_fmt(row.x0)}  case={row.case or '-'}  "
            f"x1_pred={_fmt(row.x1_predicted)}  x1_sim={_fmt(row.x1_simulated)}  "
            f"abs_err={_fmt(row.abs_error)}{suffix}"
        )
    if result.max_abs_error is not None:
        print(f"max abs error: {_fmt(result.max_abs_error)} over {len(result.rows)} rows")
    if args.out:
        result.to_csv(args.out)
    return 0


def _cmd_figure(args: argparse.Namespace) -> int:
    result = harness.reproduce_figure(args.fig_id, args.out)
    print(f"wrote {args.fig_id} table ({len(result.rows)} rows) to {args.out}")
    print(f"metadata sidecar: {args.out}.meta.json")
    return 0


def _cmd_check(args: argparse.Namespace) -> int:
    system = _resolve_system(args)
    header = ("item", "passed", "detail")
    meta = {"kind": "check", "system": system.name, "params": dict(system.params),
            "x0": args.x0, "version": __version__}
    try:
        profile = spectral.check_assumptions(system, args.x0)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _write_error_out(args.out, header, meta, exc)
        return 1
    report = profile.assumption_report
    print(f"system: {system.name}")
    print(f"x0: {_fmt(args.x0)}")
    print(report.to_text())
    n_pass = sum(1 for item in report.items if item.passed)
    overall = "pass" if report.all_passed else "FAIL"
    print(f"overall: {overall} ({n_pass}/{len(report.items)} passed)")
    if args.out:
        rows = [
            (str(k), _cell(report.item(k).passed), report.item(k).detail)
            for k in range(1, len(report.items) + 1)
        ]
        _write_atomic(args.out, _csv_body(header, rows))
        _write_sidecar(args.out, meta)
    return 0


# -- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fastslow",
        description=(
            "Entry-exit analysis of fast-slow systems whose linearization "
            "eigenvalues cross: predictions, direct integration, and study "
            "tables."
        ),
    )
    parser.add_argument("--version", action="version", version=f"fastslow {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    sub = subs.add_parser(
        "analyze", formatter_class=fmt,
        help="collision geometry, expansion coefficients, scaling constant",
    )
    _add_system_flags(sub)
    sub.add_argument("--out", default=None, help="write key,value CSV here")
    sub.set_defaults(func=_cmd_analyze)

    sub = subs.add_parser(
        "predict", formatter_class=fmt, help="predict the exit point for one x0"
    )
    _add_system_flags(sub)
    sub.add_argument("--x0", type=float, required=True, help="entry point")
    sub.add_argument("--out", default=None, help="write one-row CSV here")
    sub.set_defaults(func=_cmd_predict)

    sub = subs.add_parser(
        "simulate", formatter_class=fmt,
        help="integrate and detect cylinder entry/exit",
    )
    _add_system_flags(sub)
    sub.add_argument("--x0", type=float, required=True, help="slow initial value")
    sub.add_argument(
        "--init", type=_parse_init, default=(1.0, 1.0), metavar="Z1,Z2",
        help="fast initial values",
    )
    sub.add_argument("--eps", type=float, required=True, help="slow speed")
    sub.add_argument(
        "--delta", type=float, default=odeint.DEFAULT_CYLINDER_RADIUS,
        help="cylinder radius",
    )
    sub.add_argument("--rtol", type=float, default=odeint.DEFAULT_RTOL,
                     help="relative tolerance")
    sub.add_argument("--atol", type=float, default=odeint.DEFAULT_ATOL,
                     help="absolute tolerance")
    sub.add_argument("--x-stop", type=float, default=None,
                     help="stop when x reaches this (default: domain end)")
    sub.add_argument("--out", default=None, help="write the trace CSV here")
    sub.set_defaults(func=_cmd_simulate)

    sub = subs.add_parser(
        "sweep", formatter_class=fmt,
        help="prediction-vs-simulation table over a grid (or --eps-list study)",
    )
    _add_system_flags(sub)
    sub.add_argument(
        "--grid", type=_parse_grid, default=None, metavar="LO:HI:N",
        help="N uniform x0 points strictly inside (LO, HI) "
             "(default -2:-0.25:36; write --grid=LO:HI:N when LO is "
             "negative so the value is not read as a flag)",
    )
    sub.add_argument("--x0", type=float, default=None,
                     help="entry point (for --eps-list studies)")
    sub.add_argument("--eps", type=float, default=None, help="slow speed")
    sub.add_argument(
        "--eps-list", type=_parse_eps_list, default=None, metavar="E1,E2,...",
        help="descending eps values: tabulate exit vs eps at fixed --x0",
    )
    sub.add_argument(
        "--init", type=_parse_init, default=(1.0, 1.0), metavar="Z1,Z2",
        help="fast initial values",
    )
    sub.add_argument(
        "--delta", type=float, default=None,
        help="cylinder radius (default: the fast init's own radius, so the "
             "grid x0 is the entry point)",
    )
    sub.add_argument("--rtol", type=float, default=odeint.DEFAULT_RTOL,
                     help="relative tolerance")
    sub.add_argument("--atol", type=float, default=odeint.DEFAULT_ATOL,
                     help="absolute tolerance")
    sub.add_argument("--out", default=None, help="write the table CSV here")
    sub.set_defaults(func=_cmd_sweep)

    sub = subs.add_parser(
        "figure", formatter_class=fmt, help="write a canned study table"
    )
    sub.add_argument("fig_id", choices=harness._FIG_IDS, help="which table")
    sub.add_argument("--out", required=True, help="CSV output path")
    sub.set_defaults(func=_cmd_figure)

    sub = subs.add_parser(
        "check", formatter_class=fmt,
        help="standing-assumption verdicts for one entry point",
    )
    _add_system_flags(sub)
    sub.add_argument("--x0", type=float, required=True, help="entry point")
    sub.add_argument("--out", default=None, help="write item,passed,detail CSV here")
    sub.set_defaults(func=_cmd_check)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse printed its own message
        code = exc.code
        return code if isinstance(code, int) else 0
    try:
        return args.func(args)
    except SystemDefinitionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, StepSizeUnderflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FastSlowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
