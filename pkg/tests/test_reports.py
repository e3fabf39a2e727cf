"""Report emission: CSV roundtrips, SVG structure, deterministic JSON, and
replay from results.json."""
import csv
import json
import os
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from priorsculpt import (ExperimentConfig, emit_reports, replay_reports,
                         run_trials)
from priorsculpt.reports import (DELTAS_HEADER, WEIGHTS_HEADER,
                                 load_results_json, read_weights_csv,
                                 write_deltas_csv, write_weights_csv)
from priorsculpt.experiment import result_to_dict


CFG = dict(dim=4, sigma_t=4.0, knots=3, n_pairs=2000, trials=2, iters=40,
           statistics=("one-minus-dr-at-far:0.05", "one-minus-auc"))


@pytest.fixture(scope="module")
def result():
    return run_trials(ExperimentConfig(**CFG))


@pytest.fixture(scope="module")
def tree(result, tmp_path_factory):
    out = tmp_path_factory.mktemp("reports")
    paths = emit_reports(result, out)
    return out, paths


def test_layout(tree):
    out, paths = tree
    rel = sorted(os.path.relpath(p, out) for p in paths)
    assert "aggregates.json" in rel
    assert "results.json" in rel
    assert "timing.json" in rel
    for slug in ("one-minus-dr-at-far-0.05", "one-minus-auc"):
        for name in ("weights.csv", "deltas.csv", "weights.svg",
                     "weights_mean.svg", "deltas.svg"):
            assert os.path.join(slug, name) in rel


def test_weights_csv_roundtrip(tree, result):
    out, _ = tree
    path = os.path.join(out, "one-minus-dr-at-far-0.05", "weights.csv")
    parsed = read_weights_csv(path)
    assert sorted(parsed) == [0, 1]
    for t in result.trials:
        if t.statistic != "one-minus-dr-at-far:0.05":
            continue
        a, w, success = parsed[t.index]
        np.testing.assert_allclose(w, t.sculpt.weights.w, rtol=0, atol=1e-12)
        np.testing.assert_allclose(a, result.abundances, rtol=0, atol=1e-12)
        assert success == t.sculpt.success
    # repr floats actually roundtrip exactly, not merely to 1e-12
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    got = [float(r["weight"]) for r in rows if r["trial"] == "0"]
    want = next(t for t in result.trials
                if t.statistic == "one-minus-dr-at-far:0.05").sculpt.weights.w
    assert got == want.tolist()


def test_deltas_csv_contents(tree, result):
    out, _ = tree
    path = os.path.join(out, "one-minus-auc", "deltas.csv")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == DELTAS_HEADER
    assert len(rows) == 1 + 2 * 3 * 4  # trials * knots * detectors
    r0 = rows[1]
    t0 = next(t for t in result.trials if t.statistic == "one-minus-auc")
    assert r0[2] == "clairvoyant"
    assert float(r0[3]) == t0.comparisons["clairvoyant"][0]


def test_svg_well_formed(tree):
    out, _ = tree
    path = os.path.join(out, "one-minus-dr-at-far-0.05", "weights.svg")
    root = ET.parse(path).getroot()
    assert root.tag.endswith("svg")
    ns = {"s": "http://www.w3.org/2000/svg"}
    polylines = root.findall(".//s:polyline", ns)
    assert len(polylines) == 2  # one per trial
    # error-bar chart has the same skeleton
    mean = ET.parse(os.path.join(out, "one-minus-dr-at-far-0.05",
                                 "weights_mean.svg")).getroot()
    assert len(mean.findall(".//s:polyline", ns)) == 1
    assert len(mean.findall(".//s:line", ns)) > 0


def test_json_deterministic(tree, result, tmp_path):
    out, _ = tree
    again = run_trials(ExperimentConfig(**CFG))
    emit_reports(again, tmp_path)
    for name in ("aggregates.json", "results.json"):
        a = open(os.path.join(out, name), "rb").read()
        b = open(os.path.join(tmp_path, name), "rb").read()
        assert a == b, name
    # timing differs between runs and is quarantined in its own file
    assert json.load(open(os.path.join(out, "timing.json")))["total"] > 0


def test_results_json_reloadable(tree, result):
    out, _ = tree
    loaded = load_results_json(os.path.join(out, "results.json"))
    assert json.dumps(result_to_dict(loaded), sort_keys=True) == \
        json.dumps(result_to_dict(result), sort_keys=True)


def test_replay_byte_identical(tree, tmp_path):
    out, _ = tree
    written = replay_reports(os.path.join(out, "results.json"), tmp_path)
    rel = sorted(os.path.relpath(p, tmp_path) for p in written)
    assert "timing.json" not in rel  # replays carry no wall times
    for r in rel:
        a = open(os.path.join(out, r), "rb").read()
        b = open(os.path.join(tmp_path, r), "rb").read()
        assert a == b, r


def test_empty_result_headers_only(tmp_path, monkeypatch):
    # a statistic with no surviving trials writes headers and no charts
    import priorsculpt.experiment as exp_mod

    def boom(*a, **k):
        raise RuntimeError("forced failure")

    monkeypatch.setattr(exp_mod, "random_restart_babysteps", boom)
    broken = run_trials(ExperimentConfig(**CFG))
    p1 = write_weights_csv(tmp_path / "w.csv", broken, "one-minus-auc")
    p2 = write_deltas_csv(tmp_path / "d.csv", broken, "one-minus-auc")
    with open(p1, newline="") as fh:
        assert list(csv.reader(fh)) == [list(WEIGHTS_HEADER)]
    with open(p2, newline="") as fh:
        assert list(csv.reader(fh)) == [list(DELTAS_HEADER)]
    paths = emit_reports(broken, tmp_path / "tree")
    svgs = [p for p in paths if p.endswith(".svg")]
    assert svgs == []
    # the dump still records what failed
    blob = json.load(open(tmp_path / "tree" / "results.json"))
    assert all(t["error"] for t in blob["trials"])
