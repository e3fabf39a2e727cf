"""CSV / JSON / SVG emission for experiment results.

Layout under the output directory:

    aggregates.json          per-statistic summaries + config echo
    results.json             full deterministic dump (reloadable)
    timing.json              wall times (the one non-deterministic file,
                             kept apart so reruns stay bit-identical)
    <statistic-slug>/
        weights.csv          trial, knot_index, abundance, weight, success
        deltas.csv           trial, knot_index, detector, statistic_value
        weights.svg          per-trial weight curves (dashed = no success)
        weights_mean.svg     mean weights with standard-error bars
        deltas.svg           mean detector minus rglrt per knot

Floats are written with repr, which round-trips exactly in Python 3.
"""
from __future__ import annotations

import csv
import json
import logging
import os

import numpy as np

from .experiment import (DETECTOR_NAMES, ExperimentResult, result_from_dict,
                         result_to_dict)
from .roc import parse_statistic
from .svgplot import Series, write_chart

logger = logging.getLogger(__name__)

__all__ = [
    "emit_reports",
    "write_weights_csv",
    "write_deltas_csv",
    "read_weights_csv",
    "load_results_json",
    "replay_reports",
]

WEIGHTS_HEADER = ("trial", "knot_index", "abundance", "weight", "success")
DELTAS_HEADER = ("trial", "knot_index", "detector", "statistic_value")


def _stat_rows(result, stat_name):
    return [t for t in result.trials if t.statistic == stat_name and t.error is None]


def write_weights_csv(path, result: ExperimentResult, stat_name):
    """One row per (trial, knot); headers-only when there are no trials."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(WEIGHTS_HEADER)
        for t in _stat_rows(result, stat_name):
            w = t.sculpt.weights.w
            for k, a in enumerate(result.abundances):
                writer.writerow((t.index, k, repr(float(a)),
                                 repr(float(w[k])), t.sculpt.success))
    return path


def write_deltas_csv(path, result: ExperimentResult, stat_name):
    """Raw per-knot statistic values of the four detectors, long format."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DELTAS_HEADER)
        for t in _stat_rows(result, stat_name):
            for k in range(result.abundances.shape[0]):
                for name in DETECTOR_NAMES:
                    writer.writerow((t.index, k, name,
                                     repr(float(t.comparisons[name][k]))))
    return path


def read_weights_csv(path):
    """Parse a weights.csv back into {trial: (abundances, weights, success)}."""
    out = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            trial = int(row["trial"])
            rec = out.setdefault(trial, ([], [], None))
            rec[0].append(float(row["abundance"]))
            rec[1].append(float(row["weight"]))
            out[trial] = (rec[0], rec[1], row["success"] == "True")
    return {t: (np.asarray(a), np.asarray(w), s) for t, (a, w, s) in out.items()}


def _weights_chart(path, result, agg):
    rows = _stat_rows(result, agg.statistic)
    if not rows:
        return None
    series = [Series(x=result.abundances, y=t.sculpt.weights.w,
                     label=f"trial {t.index}", dashed=not t.sculpt.success)
              for t in rows]
    return write_chart(path, series,
                       title=f"sculpted weights  [{agg.statistic}]",
                       xlabel="abundance", ylabel="weight")


def _weights_mean_chart(path, result, agg):
    if agg.n_trials == 0:
        return None
    series = [Series(x=agg.abundances, y=agg.mean_weights,
                     label=f"mean of {agg.n_trials} trials", err=agg.se_weights)]
    return write_chart(path, series,
                       title=f"mean sculpted weights  [{agg.statistic}]",
                       xlabel="abundance", ylabel="weight")


def _deltas_chart(path, result, agg):
    if agg.n_trials == 0:
        return None
    series = []
    for name in DETECTOR_NAMES:
        if name == "rglrt":
            continue
        series.append(Series(x=agg.abundances, y=agg.mean_delta[name],
                             label=f"{name} - rglrt"))
    return write_chart(path, series,
                       title=f"detector minus rglrt  [{agg.statistic}]",
                       xlabel="abundance", ylabel="statistic difference")


def emit_reports(result: ExperimentResult, out_dir):
    """Write every artifact for a run; returns the list of paths written."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    agg_blob = {
        "config": result.config.to_dict(),
        "config_hash": result.config.config_hash,
        "sigma_t": result.sigma_t,
        "abundances": result.abundances.tolist(),
        "aggregates": result_to_dict(result)["aggregates"],
    }
    path = os.path.join(out_dir, "aggregates.json")
    _dump_json(path, agg_blob)
    written.append(path)

    path = os.path.join(out_dir, "results.json")
    _dump_json(path, result_to_dict(result))
    written.append(path)

    # Replayed results carry no wall times; skip the sidecar then so a
    # replayed tree never shadows real timings with zeros.
    if any(t.wall_time for t in result.trials):
        timing = {
            "trials": [
                {"index": t.index, "statistic": t.statistic,
                 "wall_time": t.wall_time}
                for t in result.trials
            ],
            "total": float(sum(t.wall_time for t in result.trials)),
        }
        path = os.path.join(out_dir, "timing.json")
        _dump_json(path, timing)
        written.append(path)

    for agg in result.aggregates:
        slug = parse_statistic(agg.statistic).slug
        stat_dir = os.path.join(out_dir, slug)
        os.makedirs(stat_dir, exist_ok=True)
        written.append(write_weights_csv(
            os.path.join(stat_dir, "weights.csv"), result, agg.statistic))
        written.append(write_deltas_csv(
            os.path.join(stat_dir, "deltas.csv"), result, agg.statistic))
        for maker, name in ((_weights_chart, "weights.svg"),
                            (_weights_mean_chart, "weights_mean.svg"),
                            (_deltas_chart, "deltas.svg")):
            made = maker(os.path.join(stat_dir, name), result, agg)
            if made:
                written.append(made)
    logger.info("wrote %d report files under %s", len(written), out_dir)
    return written


def _dump_json(path, blob):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(blob, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_results_json(path) -> ExperimentResult:
    with open(path, "r", encoding="utf-8") as fh:
        return result_from_dict(json.load(fh))


def replay_reports(results_path, out_dir):
    """Regenerate the full report tree from a stored results.json."""
    return emit_reports(load_results_json(results_path), out_dir)
