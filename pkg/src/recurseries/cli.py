"""Command-line front end.

Subcommands: analyze (full pipeline), iterate (orbit CSV), limit (quotient
probe or exponent search), compare (majorant domination check). Exit codes:
0 decisive, 2 inconclusive / not found / domination failure, 1 error.

All numeric output goes through mpmath.nstr at the configured precision so
reports carry decimal strings, not binary floats, and two runs with the
same configuration produce byte-identical output.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from dataclasses import dataclass
from typing import List, Optional, Tuple

import mpmath

from .classify import (
    AnalysisError,
    AnalyzerConfig,
    FINITE_NONZERO,
    INCONCLUSIVE,
    MajorantSpec,
    PrecisionGuardError,
    analyze,
    check_monotone,
    detect_mode,
    majorant_rule,
    probe_limit,
    search_exponent,
)
from .expr import (
    DEFAULT_PRECISION,
    EvalDomainError,
    ExprError,
    MIN_PRECISION,
    TaylorDef,
    context,
    evaluator,
    parse,
    parse_constant,
    taylor_polynomial,
)
from .grids import GridSpec, PROBE_GRID, validation_grid
from .orbit import Mode, iterate, write_csv

COMPARE_TABLE_ROWS = 12


@dataclass
class RunConfig:
    function_text: Optional[str] = None
    x0: str = "1"
    mode: str = "auto"
    precision: int = DEFAULT_PRECISION
    max_n: int = 10**6
    floor: str = "1e-40"
    grid_start: Optional[str] = None
    grid_floor: Optional[str] = None
    grid_step: Optional[str] = None
    output: str = "text"  # text | json
    orbit_csv: Optional[str] = None
    taylor: Optional[str] = None
    a: Optional[str] = None
    majorant: Optional[str] = None
    thin: int = 1

    def validate(self) -> None:
        if self.precision < MIN_PRECISION:
            raise ValueError(f"precision must be at least {MIN_PRECISION}")
        if self.max_n < 1:
            raise ValueError("max-n must be at least 1")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if self.mode not in ("auto", "positive", "signed"):
            raise ValueError("mode must be auto, positive, or signed")
        if self.function_text is None and self.taylor is None:
            raise ValueError("give a function with --f or coefficients with --taylor")
        if self.function_text is not None and self.taylor is not None:
            raise ValueError("--f and --taylor are mutually exclusive")


def _num(value, precision: int) -> str:
    return mpmath.nstr(value, precision)


def _probe_grid(cfg: RunConfig) -> GridSpec:
    return GridSpec(
        start=cfg.grid_start or PROBE_GRID.start,
        floor=cfg.grid_floor or PROBE_GRID.floor,
        step_log10=cfg.grid_step or PROBE_GRID.step_log10,
    )


def _expr_diagnostic(err: ExprError, text: str) -> str:
    lines = [f"error: {err}"]
    offset = getattr(err, "offset", None)
    if offset is not None and text:
        lines.append("  " + text)
        lines.append("  " + " " * offset + "^")
    return "\n".join(lines)


def _parse_target(cfg: RunConfig, ctx):
    """Return (FunctionDef or TaylorDef, display label)."""
    if cfg.taylor is not None:
        coeffs = tuple(
            parse_constant(part.strip(), ctx) for part in cfg.taylor.split(",")
        )
        return TaylorDef(coeffs), f"taylor:{cfg.taylor}"
    return parse(cfg.function_text), cfg.function_text


def parse_majorant_spec(text: str, ctx) -> MajorantSpec:
    """Parse "linear:<c>", "powerlaw:a=<a>,c=<c>", or "fn:<expression>"."""
    if text.startswith("linear:"):
        return MajorantSpec.linear(text[len("linear:"):], ctx)
    if text.startswith("powerlaw:"):
        params = {}
        for part in text[len("powerlaw:"):].split(","):
            key, _, value = part.partition("=")
            params[key.strip()] = value.strip()
        if set(params) != {"a", "c"}:
            raise ValueError("powerlaw majorant needs exactly a=<a>,c=<c>")
        return MajorantSpec.powerlaw(params["a"], params["c"], ctx)
    if text.startswith("fn:"):
        return MajorantSpec.user(parse(text[len("fn:"):]))
    raise ValueError(
        "majorant must be linear:<c>, powerlaw:a=<a>,c=<c>, or fn:<expression>"
    )


def _witnesses_json(verdict, precision: int) -> dict:
    # schema order: c, a, k, majorant, delta; other witness payloads are
    # internal and stay out of the machine report
    out = {}
    w = verdict.witnesses
    for key in ("c", "a", "k"):
        if key in w:
            out[key] = _num(w[key], precision)
    if "majorant" in w:
        out["majorant"] = w["majorant"]
    if "delta" in w and w["delta"] is not None:
        out["delta"] = _num(w["delta"], precision)
    return out


def _report_json(report, cfg: RunConfig, label: str) -> str:
    p = cfg.precision
    doc = {
        "function": label,
        "x0": cfg.x0,
        "mode": report.mode.value,
        "verdict": report.verdict.conclusion,
        "rule": report.verdict.rule if report.verdict.rule is not None else "none",
        "witnesses": _witnesses_json(report.verdict, p),
    }
    der = {"kind": report.derivative.kind}
    if report.derivative.c is not None:
        der["c"] = _num(report.derivative.c, p)
    if report.derivative.band is not None:
        der["band"] = [_num(v, p) for v in report.derivative.band]
    doc["derivative"] = der
    if report.fit is not None and not report.fit.rejected:
        doc["fit"] = {
            "a": _num(report.fit.a, p),
            "k": _num(report.fit.k, p),
            "residual": _num(report.fit.residual, p),
        }
    orbit = report.orbit_result
    doc["orbit"] = {
        "n": orbit.last_index,
        "x_n": _num(orbit.terms[-1], p),
        "partial_sum": _num(orbit.partial_sums[-1], p),
        "status": orbit.status.kind,
    }
    doc["warnings"] = list(report.warnings)
    return json.dumps(doc, indent=2)


def _report_text(report, cfg: RunConfig, label: str) -> str:
    p = cfg.precision
    verdict = report.verdict
    lines = [
        f"function: {label}",
        f"x0 = {cfg.x0}  mode = {report.mode.value}  precision = {p}",
        f"verdict: {verdict.conclusion}"
        + (f" ({verdict.rule})" if verdict.rule else ""),
    ]
    # same witness subset as the JSON schema; rule-internal payloads such as
    # the analytic coefficient live in the notes instead
    for key, value in _witnesses_json(verdict, p).items():
        lines.append(f"  {key} = {value}")
    der = report.derivative
    if der.kind == "dne":
        lines.append(
            f"derivative at zero: no stable value; band"
            f" [{_num(der.band[0], p)}, {_num(der.band[1], p)}]"
        )
    else:
        lines.append(f"derivative at zero: {der.kind} c = {_num(der.c, p)}")
    if report.fit is not None and not report.fit.rejected:
        fit = report.fit
        lines.append(
            f"empirical fit: a = {_num(fit.a, p)}  k = {_num(fit.k, p)}"
            f"  residual = {_num(fit.residual, p)}"
        )
    orbit = report.orbit_result
    lines.append(
        f"orbit: n = {orbit.last_index}  x_n = {_num(orbit.terms[-1], p)}"
        f"  S_n = {_num(orbit.partial_sums[-1], p)}  status = {orbit.status.describe()}"
    )
    if report.sum is not None:
        lines.append(
            f"sum estimate: {_num(report.sum.total, p)} ({report.sum.method})"
        )
    if verdict.notes:
        lines.append("notes:")
        lines.extend(f"  - {note}" for note in verdict.notes)
    if report.warnings:
        lines.append("warnings:")
        lines.extend(f"  - {w}" for w in report.warnings)
    return "\n".join(lines)


def cmd_analyze(cfg: RunConfig) -> Tuple[int, str]:
    try:
        cfg.validate()
        ctx = context(cfg.precision)
        target, label = _parse_target(cfg, ctx)
        acfg = AnalyzerConfig(
            precision=cfg.precision,
            mode=cfg.mode,
            max_n=cfg.max_n,
            floor=cfg.floor,
            probe_grid=_probe_grid(cfg),
        )
        report = analyze(target, cfg.x0, acfg)
    except ExprError as err:
        return 1, _expr_diagnostic(err, cfg.function_text or cfg.taylor or "")
    except (AnalysisError, PrecisionGuardError, EvalDomainError, ValueError) as err:
        return 1, f"error: {err}"
    if cfg.orbit_csv:
        with open(cfg.orbit_csv, "w") as out:
            write_csv(report.orbit_result, out, thin=cfg.thin)
    if cfg.output == "json":
        out = _report_json(report, cfg, label)
    else:
        out = _report_text(report, cfg, label)
    code = 2 if report.verdict.conclusion == INCONCLUSIVE else 0
    return code, out


def cmd_iterate(cfg: RunConfig) -> Tuple[int, str]:
    try:
        cfg.validate()
        ctx = context(cfg.precision)
        target, label = _parse_target(cfg, ctx)
        if isinstance(target, TaylorDef):
            target = taylor_polynomial(target, ctx)
        if cfg.mode == "auto":
            mode = detect_mode(
                evaluator(target, ctx), validation_grid().points(ctx)
            )
        else:
            mode = Mode.SIGNED if cfg.mode == "signed" else Mode.POSITIVE
        orbit = iterate(
            target, cfg.x0, cfg.max_n, cfg.floor, mode, cfg.precision
        )
    except ExprError as err:
        return 1, _expr_diagnostic(err, cfg.function_text or cfg.taylor or "")
    except (EvalDomainError, ValueError) as err:
        return 1, f"error: {err}"
    p = cfg.precision
    summary = (
        f"n = {orbit.last_index}  x_n = {_num(orbit.terms[-1], p)}"
        f"  S_n = {_num(orbit.partial_sums[-1], p)}"
        f"  status = {orbit.status.describe()}"
    )
    if cfg.orbit_csv:
        with open(cfg.orbit_csv, "w") as out:
            rows = write_csv(orbit, out, thin=cfg.thin)
        return 0, f"wrote {rows} rows to {cfg.orbit_csv}\n{summary}"
    buffer = io.StringIO()
    write_csv(orbit, buffer, thin=cfg.thin)
    return 0, buffer.getvalue() + summary


def cmd_limit(cfg: RunConfig) -> Tuple[int, str]:
    try:
        cfg.validate()
        if cfg.a is None:
            raise ValueError('give an exponent with --a <value> or --a search')
        ctx = context(cfg.precision)
        target, label = _parse_target(cfg, ctx)
        if isinstance(target, TaylorDef):
            target = taylor_polynomial(target, ctx)
        grid = _probe_grid(cfg)
        p = cfg.precision
        if cfg.a == "search":
            result = search_exponent(target, grid=grid, precision=cfg.precision)
            if not result.found:
                return 2, f"search: NotFound - {result.note}"
            fit = result.fit
            lines = [
                f"search: a = {_num(fit.a, p)}  k = {_num(fit.k, p)}"
                f"  residual = {_num(fit.residual, p)}",
                "x,L",
            ]
            lines.extend(
                f"{_num(x, p)},{_num(v, p)}" for x, v in result.probe.samples
            )
            return 0, "\n".join(lines)
        a = parse_constant(cfg.a, ctx)
        probe = probe_limit(target, a, grid, cfg.precision)
    except ExprError as err:
        return 1, _expr_diagnostic(err, cfg.function_text or cfg.taylor or "")
    except PrecisionGuardError as err:
        return 1, f"error: {err}"
    except (EvalDomainError, ValueError) as err:
        return 1, f"error: {err}"
    lines = [f"probe: a = {_num(probe.a, p)}  verdict = {probe.verdict}"]
    if probe.verdict == FINITE_NONZERO:
        k = ctx.power(probe.L, -1 / probe.a)
        lines[0] += f"  L = {_num(probe.L, p)}  k = {_num(k, p)}"
    lines.append("x,L")
    lines.extend(f"{_num(x, p)},{_num(v, p)}" for x, v in probe.samples)
    code = 0 if probe.verdict == FINITE_NONZERO else 2
    return code, "\n".join(lines)


def cmd_compare(cfg: RunConfig) -> Tuple[int, str]:
    try:
        cfg.validate()
        if cfg.majorant is None:
            raise ValueError("give a majorant with --majorant")
        ctx = context(cfg.precision)
        target, label = _parse_target(cfg, ctx)
        if isinstance(target, TaylorDef):
            target = taylor_polynomial(target, ctx)
        spec = parse_majorant_spec(cfg.majorant, ctx)
        p = cfg.precision
        lines = [f"function: {label}", f"majorant: {spec.label}"]
        certified = False
        if spec.family == "user":
            try:
                sub = analyze(spec.fn, cfg.x0, AnalyzerConfig(precision=cfg.precision))
            except AnalysisError as err:
                lines.append(f"majorant series: analysis failed ({err}); cannot certify")
            else:
                if sub.verdict.conclusion == "convergent":
                    certified = True
                    lines.append(
                        f"majorant series: convergent ({sub.verdict.rule})"
                    )
                else:
                    lines.append(
                        f"majorant series: {sub.verdict.conclusion}; cannot certify"
                    )
        monotone, delta = check_monotone(spec.fn, precision=cfg.precision)
        lines.append(
            f"monotone on grid: {'yes' if monotone else 'no'}"
            f"  delta = {_num(delta, p)}"
        )
        verdict = majorant_rule(
            target,
            spec,
            precision=cfg.precision,
            x0=cfg.x0,
            user_certified=certified,
        )
        lines.append(
            f"verdict: {verdict.conclusion}"
            + (f" ({verdict.rule})" if verdict.rule else "")
        )
        lines.extend(f"  - {note}" for note in verdict.notes)
        g_orbit = iterate(
            target, cfg.x0, min(cfg.max_n, 10**4), cfg.floor,
            Mode.POSITIVE, cfg.precision,
        )
        m_orbit = iterate(
            spec.fn, cfg.x0, min(cfg.max_n, 10**4), cfg.floor,
            Mode.POSITIVE, cfg.precision,
        )
        common = min(g_orbit.last_index, m_orbit.last_index)
        dominated = all(
            m_orbit.terms[n] >= g_orbit.terms[n] for n in range(common + 1)
        )
        lines.append("n,g_n,m_n")
        stride = max(1, common // COMPARE_TABLE_ROWS)
        shown = list(range(0, common + 1, stride))
        if shown[-1] != common:
            shown.append(common)
        for n in shown:
            lines.append(
                f"{n},{_num(g_orbit.terms[n], p)},{_num(m_orbit.terms[n], p)}"
            )
        lines.append(
            f"orbit domination m_n >= g_n for all n <= {common}:"
            f" {'yes' if dominated else 'no'}"
        )
    except ExprError as err:
        return 1, _expr_diagnostic(err, cfg.function_text or cfg.taylor or "")
    except (AnalysisError, PrecisionGuardError, EvalDomainError, ValueError) as err:
        return 1, f"error: {err}"
    code = 0 if verdict.conclusion == "convergent" else 2
    return code, "\n".join(lines)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recurseries",
        description="Convergence analyzer for series with recursively"
        " defined terms x_{n+1} = f(x_n)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--f", dest="function_text", help="defining expression f(x)")
        sp.add_argument("--x0", default="1", help="seed value (decimal string)")
        sp.add_argument("--mode", default="auto", choices=["auto", "positive", "signed"])
        sp.add_argument("--precision", type=int, default=DEFAULT_PRECISION,
                        help="working digits (min 16)")
        sp.add_argument("--max-n", type=int, default=10**6, dest="max_n")
        sp.add_argument("--floor", default="1e-40", help="stop when |x_n| < floor")
        sp.add_argument("--taylor", help="comma-separated Taylor coefficients a1,a2,...")
        sp.add_argument("--orbit-csv", dest="orbit_csv", help="write the orbit as CSV")
        sp.add_argument("--thin", type=int, default=1, help="keep every k-th CSV row")
        sp.add_argument("--grid-start", dest="grid_start", help="probe grid start")
        sp.add_argument("--grid-floor", dest="grid_floor", help="probe grid floor")
        sp.add_argument("--grid-step", dest="grid_step",
                        help="probe grid log10 step (negative)")

    sp = sub.add_parser("analyze", help="run the full convergence pipeline")
    common(sp)
    sp.add_argument("--json", action="store_true", help="emit the JSON report")

    sp = sub.add_parser("iterate", help="iterate the orbit and emit CSV")
    common(sp)

    sp = sub.add_parser("limit", help="probe the quotient limit at an exponent")
    common(sp)
    sp.add_argument("--a", help='exponent (decimal) or "search"')

    sp = sub.add_parser("compare", help="check domination by a majorant")
    common(sp)
    sp.add_argument("--majorant",
                    help="linear:<c> | powerlaw:a=<a>,c=<c> | fn:<expression>")
    return parser


_COMMANDS = {
    "analyze": cmd_analyze,
    "iterate": cmd_iterate,
    "limit": cmd_limit,
    "compare": cmd_compare,
}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        function_text=args.function_text,
        x0=args.x0,
        mode=args.mode,
        precision=args.precision,
        max_n=args.max_n,
        floor=args.floor,
        grid_start=args.grid_start,
        grid_floor=args.grid_floor,
        grid_step=args.grid_step,
        output="json" if getattr(args, "json", False) else "text",
        orbit_csv=args.orbit_csv,
        taylor=args.taylor,
        a=getattr(args, "a", None),
        majorant=getattr(args, "majorant", None),
        thin=args.thin,
    )


def main(argv: Optional[List[str]] = None) -> None:
    args = _build_parser().parse_args(argv)
    code, output = _COMMANDS[args.command](config_from_args(args))
    if output:
        try:
            print(output)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader (e.g. head) went away; suppress the shutdown complaint
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    sys.exit(code)


if __name__ == "__main__":
    main()
