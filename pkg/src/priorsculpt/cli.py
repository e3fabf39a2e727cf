"""Command-line front end.

Subcommands: calibrate, sculpt, sweep-knots, compare-detectors, report.
Every run can start from a flat JSON config file, with any field overridden
on the command line.  Hard errors exit nonzero.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .experiment import (CalibrationError, DEFAULT_KNOT_SWEEP,
                         ExperimentConfig, calibrate, knot_sweep, run_trials)
from .reports import emit_reports, replay_reports
from .svgplot import Series, write_chart

logger = logging.getLogger(__name__)

__all__ = ["main", "build_parser"]


def _add_config_flags(p):
    p.add_argument("--config", metavar="JSON",
                   help="config file in the flat key-value schema")
    p.add_argument("--nu", type=float, help="background tail index (> 2)")
    p.add_argument("--dim", type=int, help="pixel dimension d")
    p.add_argument("--sigma-t", dest="sigma_t", type=float,
                   help="signature strength; omit to calibrate")
    p.add_argument("--knots", help="number of knots (comma list for sweep-knots)")
    p.add_argument("--pairs", type=int, help="samples per population")
    p.add_argument("--trials", type=int, help="number of trials")
    p.add_argument("--stat", action="append", metavar="NAME[:PARAM]",
                   help="ROC statistic, e.g. one-minus-dr-at-far:0.05; repeatable")
    p.add_argument("--step", type=float, help="babysteps mass per iteration")
    p.add_argument("--iters", type=int, help="babysteps iteration budget")
    p.add_argument("--restarts", type=int, help="number of optimizer starts")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--out", help="output directory for reports")


def _build_config(args, *, knots_override=None):
    base = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            base = json.load(fh)
    mapping = (("nu", "nu"), ("dim", "dim"), ("sigma_t", "sigma_t"),
               ("pairs", "n_pairs"), ("trials", "trials"), ("step", "step"),
               ("iters", "iters"), ("restarts", "restarts"),
               ("seed", "base_seed"), ("out", "out_dir"))
    for arg_name, field in mapping:
        v = getattr(args, arg_name, None)
        if v is not None:
            base[field] = v
    if getattr(args, "stat", None):
        base["statistics"] = list(args.stat)
    if knots_override is not None:
        base["knots"] = knots_override
    elif getattr(args, "knots", None) is not None:
        base["knots"] = int(args.knots)
    return ExperimentConfig.from_dict(base)


def _parse_knot_list(args):
    if getattr(args, "knots", None) is None:
        return list(DEFAULT_KNOT_SWEEP)
    return [int(tok) for tok in str(args.knots).split(",") if tok.strip()]


def _print_summary(result):
    print(f"sigma_t = {result.sigma_t!r}")
    print(f"abundances = {np.array2string(result.abundances, precision=4)}")
    for agg in result.aggregates:
        print(f"[{agg.statistic}] trials={agg.n_trials} "
              f"success={agg.success_fraction:.2f}")
        if agg.n_trials:
            print(f"  mean weights = {np.array2string(agg.mean_weights, precision=4)}")
            losses = [t.sculpt.final.loss for t in result.trials
                      if t.statistic == agg.statistic and t.error is None]
            print("  losses = " + ", ".join(f"{x:.3e}" for x in losses))
    failures = [t for t in result.trials if t.error is not None]
    for t in failures:
        print(f"  FAILED trial {t.index} [{t.statistic}]: {t.error}")


def _print_comparisons(result):
    for agg in result.aggregates:
        if agg.n_trials == 0:
            continue
        print(f"[{agg.statistic}] per-knot mean statistic values "
              "(smaller is better):")
        header = "  a      " + "".join(f"{n:>14}" for n in
                                       ("clairvoyant", "glrt", "rglrt", "bayes"))
        print(header)
        for k, a in enumerate(agg.abundances):
            row = f"  {a:<6.3f} " + "".join(
                f"{agg.mean_values[n][k]:>14.6f}"
                for n in ("clairvoyant", "glrt", "rglrt", "bayes"))
            print(row)


def cmd_calibrate(args):
    config = _build_config(args)
    sigma_t = calibrate(config)
    print(f"sigma_t = {sigma_t!r}")
    if config.out_dir:
        os.makedirs(config.out_dir, exist_ok=True)
        path = os.path.join(config.out_dir, "calibration.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"sigma_t": sigma_t, "config": config.to_dict()}, fh,
                      indent=1, sort_keys=True)
            fh.write("\n")
        print(f"wrote {path}")
    return 0


def cmd_sculpt(args):
    config = _build_config(args)
    result = run_trials(config)
    _print_summary(result)
    if config.out_dir:
        emit_reports(result, config.out_dir)
        print(f"reports under {config.out_dir}")
    return 0


def cmd_compare(args):
    config = _build_config(args)
    result = run_trials(config)
    _print_comparisons(result)
    if config.out_dir:
        emit_reports(result, config.out_dir)
        print(f"reports under {config.out_dir}")
    return 0


def cmd_sweep(args):
    k_values = _parse_knot_list(args)
    config = _build_config(args, knots_override=max(k_values))
    results = knot_sweep(config, k_values)
    for K, result in results:
        print(f"== K = {K} ==")
        _print_summary(result)
    if config.out_dir:
        os.makedirs(config.out_dir, exist_ok=True)
        for K, result in results:
            emit_reports(result, os.path.join(config.out_dir, f"K{K:02d}"))
        _sweep_chart(config.out_dir, results)
        print(f"reports under {config.out_dir}")
    return 0


def _sweep_chart(out_dir, results):
    """Mean-weight curves across knot counts, one chart per statistic."""
    if not results:
        return
    stat_names = [a.statistic for a in results[0][1].aggregates]
    for stat_name in stat_names:
        series = []
        for K, result in results:
            agg = next(a for a in result.aggregates if a.statistic == stat_name)
            if agg.n_trials == 0:
                continue
            series.append(Series(x=agg.abundances, y=agg.mean_weights,
                                 label=f"K={K}"))
        if series:
            slug = stat_name.replace(":", "-")
            write_chart(os.path.join(out_dir, f"sweep_{slug}.svg"), series,
                        title=f"mean weights by knot count  [{stat_name}]",
                        xlabel="abundance", ylabel="weight")


def cmd_report(args):
    out = args.out or os.path.dirname(os.path.abspath(args.results))
    written = replay_reports(args.results, out)
    print(f"rewrote {len(written)} files under {out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="priorsculpt",
        description="Sculpt delta-comb priors for sub-pixel detection "
                    "against a restricted GLRT baseline.")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="bisect sigma_t into the informative regime")
    _add_config_flags(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("sculpt", help="run sculpting trials and report weights")
    _add_config_flags(p)
    p.set_defaults(func=cmd_sculpt)

    p = sub.add_parser("sweep-knots", help="run trials across knot counts")
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare-detectors",
                       help="per-knot statistic values of all four detectors")
    _add_config_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="regenerate reports from results.json")
    p.add_argument("--results", required=True, help="path to results.json")
    p.add_argument("--out", help="output directory (defaults alongside input)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except (CalibrationError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
