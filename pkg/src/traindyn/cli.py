"""Command-line front end: analyze traces, sweep parameters, synthesize fixtures.

Exit codes: 0 on success, 1 on runtime failure (unreadable input, malformed
trace, failed generation), 2 on usage errors. Reports are written without
timestamps, so identical inputs and flags produce byte-identical files.
Set TRAINDYN_NO_COLOR to disable ANSI colour in the summary output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import sensitivity as sens
from .composite import analyze
from .errors import SchemaError, TrainDynError
from .synthgen import SCENARIOS, gen_trace
from .trace import AnalysisConfig, MetricSeries, load_trace, save_trace

_DASH = sens.DASH


def _ranged_float(lo: float, hi: float, constraint: str):
    def parse(text: str) -> float:
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
        if not lo <= value <= hi:
            raise argparse.ArgumentTypeError(f"{value} violates {constraint}")
        return value

    return parse


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if value <= 0:
        raise argparse.ArgumentTypeError(f"{value} must be positive")
    return value


def _int_at_least(minimum: int):
    def parse(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
        if value < minimum:
            raise argparse.ArgumentTypeError(f"{value} must be >= {minimum}")
        return value

    return parse


def _use_color() -> bool:
    return sys.stdout.isatty() and not os.environ.get("TRAINDYN_NO_COLOR")


def _emph(text: str) -> str:
    return f"\033[1;36m{text}\033[0m" if _use_color() else text


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--h-opt", type=float, default=0.7, help="integration target exponent")
    parser.add_argument("--sigma-h", type=_positive_float, default=0.1, help="tuning width (> 0)")
    parser.add_argument(
        "--w-h",
        type=_ranged_float(0.0, 1.0, "the [0,1] constraint on w_h"),
        default=0.5,
        help="composite weight on integration; metastability gets 1 - w_h",
    )
    parser.add_argument("--window", type=_int_at_least(2), default=5, help="rolling window (>= 2)")
    parser.add_argument(
        "--threshold", type=_positive_float, default=0.30, help="volatility convergence threshold"
    )
    parser.add_argument(
        "--phase-mode", choices=("retrospective", "causal"), default="retrospective"
    )
    parser.add_argument("--dfa-min-scale", type=_int_at_least(4), default=4)
    parser.add_argument(
        "--plateau-fraction",
        type=_ranged_float(1e-9, 1.0, "the (0,1] constraint on plateau fraction"),
        default=0.99,
    )
    parser.add_argument(
        "--hz-field",
        choices=("heff", "hraw"),
        default="heff",
        help="integration field used for the inter-field synchrony coefficient",
    )
    parser.add_argument("--format", choices=("csv", "jsonl"), default=None, help="trace format")


def _config_from(args: argparse.Namespace) -> AnalysisConfig:
    return AnalysisConfig(
        h_opt=args.h_opt,
        sigma_h=args.sigma_h,
        w_h=args.w_h,
        rolling_window=args.window,
        volatility_threshold=args.threshold,
        phase_mode=args.phase_mode,
        dfa_min_scale=args.dfa_min_scale,
        plateau_fraction=args.plateau_fraction,
        hz_field=args.hz_field,
    )


def _trace_format(path: str, explicit: str | None) -> str:
    if explicit:
        return explicit
    return "jsonl" if Path(path).suffix.lower() == ".jsonl" else "csv"


def _fmt(value, fmt: str = ".3f") -> str:
    return _DASH if value is None else format(value, fmt)


def cmd_analyze(args: argparse.Namespace) -> int:
    trace = load_trace(args.trace, _trace_format(args.trace, args.format))
    report = analyze(trace, _config_from(args))
    if args.output:
        report.save(args.output)

    s = report.summary
    print(f"run        : {report.run_id} ({len(report.epoch_indices)} epochs, "
          f"{len(report.layer_names)} layers)")
    print(f"state      : {_emph(report.state)}")
    print(f"H_eff      : {_fmt(s.mean_heff)} ± {_fmt(s.std_heff)}")
    print(f"M          : {_fmt(s.mean_m)}")
    print(f"Psi        : {_fmt(s.mean_psi)} ± {_fmt(s.std_psi)}")
    print(f"r(H_z,M_z) : {_fmt(s.r_hz_mz, '+.3f')}")
    print(f"r(Psi,acc) : {_fmt(s.r_psi_acc, '+.3f')}")
    print(f"sigma_Psi < {report.config.volatility_threshold:g} at epoch "
          f"{_fmt(s.volatility_crossing_epoch, 'd')}; accuracy plateau at epoch "
          f"{_fmt(s.accuracy_plateau_epoch, 'd')}")
    for warning in report.flags.get("warnings", []):
        print(f"warning    : {warning}", file=sys.stderr)
    if args.output:
        print(f"report     : {args.output}")
    return 0


def _series_from_report(doc: dict, name: str) -> MetricSeries:
    return MetricSeries(doc["series"][name])


def cmd_sensitivity(args: argparse.Namespace) -> int:
    path = Path(args.input)
    doc = None
    if path.suffix.lower() == ".json":
        loaded = json.loads(path.read_text(encoding="utf-8"))
        if isinstance(loaded, dict) and "series" in loaded and "config" in loaded:
            doc = loaded
    if doc is None:
        trace = load_trace(args.input, _trace_format(args.input, args.format))
        doc = analyze(trace, _config_from(args)).to_json()

    required = {"h_raw", "h_eff_norm", "m_norm", "sigma_psi"}
    missing = required - set(doc.get("series", {}))
    if missing or "trace" not in doc:
        raise SchemaError(f"report lacks required series: {sorted(missing) or 'trace block'}")
    epochs = doc["trace"]["epochs"]
    h_raw = _series_from_report(doc, "h_raw")
    heff_norm = _series_from_report(doc, "h_eff_norm")
    m_norm = _series_from_report(doc, "m_norm")
    sigma_psi = _series_from_report(doc, "sigma_psi")
    accuracy = (
        _series_from_report(doc, "accuracy") if "accuracy" in doc["series"] else None
    )

    grid = sens.heff_grid(h_raw, args.h_opt_grid, args.sigma_grid)
    if accuracy is not None:
        weights = sens.weight_grid(heff_norm, m_norm, accuracy, args.w_h_grid)
    else:
        weights = {
            "cells": [{"w_h": w, "r_psi_acc": None} for w in args.w_h_grid],
            "sign_stable": False,
            "note": "accuracy unavailable",
        }
    thresholds = sens.threshold_grid(
        sigma_psi,
        args.threshold_grid,
        accuracy=accuracy,
        epochs=epochs,
        plateau_fraction=args.plateau_fraction,
    )

    print("== mean H_eff over (H_opt, sigma_H) ==")
    print(sens.render_heff_grid(grid))
    print()
    print("== r(Psi, acc) over composite weights ==")
    print(sens.render_weight_grid(weights))
    if "note" in weights:
        print(f"({weights['note']})")
    print()
    print("== volatility threshold crossings ==")
    print(sens.render_threshold_grid(thresholds))

    if args.output:
        payload = {
            "heff_grid": grid,
            "weight_grid": weights,
            "threshold_grid": thresholds,
        }
        Path(args.output).write_text(
            json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n",
            encoding="utf-8",
        )
        print(f"\ngrids written to {args.output}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    trace = gen_trace(args.scenario, args.length, args.seed, n_layers=args.layers)
    fmt = _trace_format(args.output, args.format)
    save_trace(trace, args.output, fmt)
    report = analyze(trace, AnalysisConfig())
    print(f"wrote {args.output} ({args.length} epochs, {args.layers} layers)")
    print(f"self-check state: {_emph(report.state)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="traindyn",
        description="Dynamical training diagnostics from layer-activation traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_an = sub.add_parser("analyze", help="run the full diagnostic pipeline on a trace")
    p_an.add_argument("trace", help="trace file (CSV or JSONL)")
    _add_config_flags(p_an)
    p_an.add_argument("-o", "--output", help="write the analysis report JSON here")
    p_an.set_defaults(func=cmd_analyze)

    p_se = sub.add_parser("sensitivity", help="parameter sweeps over a trace or stored report")
    p_se.add_argument("input", help="trace file or analysis-report JSON")
    _add_config_flags(p_se)
    p_se.add_argument(
        "--h-opt-grid", type=float, nargs="+", default=list(sens.DEFAULT_H_OPT_GRID)
    )
    p_se.add_argument(
        "--sigma-grid", type=_positive_float, nargs="+", default=list(sens.DEFAULT_SIGMA_GRID)
    )
    p_se.add_argument(
        "--w-h-grid",
        type=_ranged_float(0.0, 1.0, "the [0,1] constraint on w_h"),
        nargs="+",
        default=list(sens.DEFAULT_WEIGHT_GRID),
    )
    p_se.add_argument(
        "--threshold-grid",
        type=_positive_float,
        nargs="+",
        default=list(sens.DEFAULT_THRESHOLD_GRID),
    )
    p_se.add_argument("-o", "--output", help="write the grid cells as JSON here")
    p_se.set_defaults(func=cmd_sensitivity)

    p_sy = sub.add_parser("synth", help="generate a synthetic fixture trace")
    p_sy.add_argument("scenario", choices=SCENARIOS)
    p_sy.add_argument("--length", type=_int_at_least(40), default=60)
    p_sy.add_argument("--seed", type=int, required=True, help="mandatory; no hidden entropy")
    p_sy.add_argument("--layers", type=_int_at_least(2), default=4)
    p_sy.add_argument("--format", choices=("csv", "jsonl"), default=None)
    p_sy.add_argument("-o", "--output", required=True, help="trace file to write")
    p_sy.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: cannot read {exc.filename}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except TrainDynError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
