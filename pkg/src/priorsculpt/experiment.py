"""Experiment orchestration: calibration, trials, sweeps, aggregation.

A run is fully described by an ExperimentConfig.  Given the config and its
base seed, every number produced here is reproducible bit for bit: trial i
draws from default_rng(base_seed + i), restart draws use a generator keyed
by (trial seed, statistic index), and all reductions run in a fixed order.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import time
from dataclasses import dataclass

import numpy as np

from ._validation import check_index, check_scalar
from .background import TBackground
from .detectors import KnotGrid, PriorWeights, glrt_score, log_lr_mr
from .roc import RocStatistic, evaluate_arrays, parse_statistic
from .sculpt import (LossReport, ScoredPairs, SculptResult,
                     random_restart_babysteps)
from .targets import TargetSignature, implant_mfr, make_matched_pairs, mfr_project

logger = logging.getLogger(__name__)

__all__ = [
    "ExperimentConfig",
    "TrialResult",
    "StatisticAggregate",
    "ExperimentResult",
    "CalibrationError",
    "calibrate",
    "calibrate_sigma_t",
    "run_trials",
    "knot_sweep",
    "default_statistic_panel",
    "DEFAULT_FAR_SWEEP",
    "DEFAULT_KNOT_SWEEP",
    "DETECTOR_NAMES",
    "result_to_dict",
    "result_from_dict",
]

# The DR@FAR operating points swept by the default statistic panel, and the
# default knot counts for sweeps.  Both are config-overridable.
DEFAULT_FAR_SWEEP = (0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1)
DEFAULT_KNOT_SWEEP = (1, 2, 5, 10, 15, 20)

DETECTOR_NAMES = ("clairvoyant", "glrt", "rglrt", "bayes")

# Offset keeping the calibration probe stream away from the trial streams.
_CALIBRATION_SEED_OFFSET = 10_000_019

_CAL_FAR = 0.05
_CAL_BAND = (0.4, 0.8)
_CAL_PROBE = 100_000
_CAL_RANGE = (0.5, 50.0)


class CalibrationError(RuntimeError):
    """Signature-strength bisection could not reach the target band."""


def default_statistic_panel():
    """The nine-statistic panel: a FAR sweep of DR statistics, FAR@DR=0.5,
    and AUC."""
    stats = [f"one-minus-dr-at-far:{x:g}" for x in DEFAULT_FAR_SWEEP]
    stats.append("far-at-dr:0.5")
    stats.append("one-minus-auc")
    return tuple(stats)


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat description of a sculpting experiment.

    sigma_t = None means "calibrate before running".  statistics holds the
    string forms understood by parse_statistic.
    """

    nu: float = 3.0
    dim: int = 9
    sigma_t: float | None = None
    knots: int = 5
    n_pairs: int = 100_000
    trials: int = 5
    statistics: tuple = ("one-minus-dr-at-far:0.05",)
    step: float = 0.01
    iters: int = 500
    restarts: int = 1
    base_seed: int = 1812
    out_dir: str | None = None

    def __post_init__(self):
        check_scalar(self.nu, "nu", minimum=2.0, min_inclusive=False)
        check_index(self.dim, "dim", minimum=1)
        if self.sigma_t is not None:
            check_scalar(self.sigma_t, "sigma_t", minimum=0.0, min_inclusive=False)
        check_index(self.knots, "knots", minimum=1)
        check_index(self.n_pairs, "n_pairs", minimum=1)
        check_index(self.trials, "trials", minimum=1)
        check_scalar(self.step, "step", minimum=0.0, min_inclusive=False)
        check_index(self.iters, "iters", minimum=0)
        check_index(self.restarts, "restarts", minimum=1)
        check_index(self.base_seed, "base_seed", minimum=0)
        if len(self.statistics) == 0:
            raise ValueError("statistics must be non-empty")
        # Normalize to canonical string forms (also validates each one).
        canon = tuple(str(parse_statistic(s)) for s in self.statistics)
        object.__setattr__(self, "statistics", canon)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["statistics"] = list(d["statistics"])
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        unknown = set(d) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "statistics" in d and d["statistics"] is not None:
            if isinstance(d["statistics"], str):
                d["statistics"] = (d["statistics"],)
            else:
                d["statistics"] = tuple(d["statistics"])
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    @property
    def config_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class TrialResult:
    """One (trial, statistic) cell of a run.

    A trial that raised is recorded with its error message and None fields
    rather than being dropped, so aggregate counts stay honest.
    """

    index: int
    seed: int
    statistic: str
    sculpt: SculptResult | None
    comparisons: dict | None
    wall_time: float
    error: str | None = None


@dataclass
class StatisticAggregate:
    """Across-trial summary for one statistic."""

    statistic: str
    abundances: np.ndarray
    mean_weights: np.ndarray
    se_weights: np.ndarray
    success_fraction: float
    mean_values: dict
    mean_delta: dict
    n_trials: int


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    sigma_t: float
    abundances: np.ndarray
    trials: list
    aggregates: list


def calibrate_sigma_t(background: TBackground, knots: KnotGrid, seed, *,
                      far=_CAL_FAR, band=_CAL_BAND, probe=_CAL_PROBE,
                      lo=_CAL_RANGE[0], hi=_CAL_RANGE[1], max_iter=80):
    """Bisect the signature strength into the informative regime.

    The probe sample is drawn once; its (m, r) coordinates do not depend on
    sigma_t (m is a unit-direction projection), so each bisection step only
    re-implants and re-scores, and the whole search is deterministic given
    the seed.

    The weak-signature limit is not null: replacing a fraction a of the
    pixel contracts it by (1 - a) whatever the signature strength, and that
    contraction alone is detectable (DR near 0.45 at d=9, a=0.5).  The
    reachable DR range therefore starts at this floor, not at the false
    alarm rate.

    Returns:
        (sigma_t, achieved_dr): the strength and the clairvoyant DR@far it
        achieves at the middle knot on the probe.

    Raises:
        CalibrationError: if the band cannot be bracketed or reached.
    """
    rng = np.random.default_rng(seed)
    x = background.sample(probe, rng)
    pts = mfr_project(background, TargetSignature.from_sigma(background, 1.0), x)
    a_mid = float(knots.abundances[knots.K // 2])
    nu, dim = background.nu, background.dim

    def dr(sigma):
        tgt = implant_mfr(pts, a_mid, sigma)
        b = log_lr_mr(a_mid, pts.m, pts.r, nu, dim, sigma)
        t = log_lr_mr(a_mid, tgt.m, tgt.r, nu, dim, sigma)
        return 1.0 - evaluate_arrays(RocStatistic.one_minus_dr_at_far(far), b, t)

    d_lo, d_hi = dr(lo), dr(hi)
    if band[0] <= d_lo <= band[1]:
        return lo, d_lo
    if band[0] <= d_hi <= band[1]:
        return hi, d_hi
    if d_lo > band[1] or d_hi < band[0]:
        raise CalibrationError(
            f"cannot bracket DR band {band}: DR({lo})={d_lo:.4f}, DR({hi})={d_hi:.4f}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        v = dr(mid)
        if band[0] <= v <= band[1]:
            logger.info("calibrated sigma_t=%.6g (DR@%.3g=%.4f at a=%.3g)",
                        mid, far, v, a_mid)
            return mid, v
        if v < band[0]:
            lo = mid
        else:
            hi = mid
    raise CalibrationError(
        f"bisection did not reach DR band {band} in {max_iter} steps; "
        f"last sigma_t={mid:.6g}, DR={v:.4f}")


def calibrate(config: ExperimentConfig):
    """Signature strength for a config; the configured value if set."""
    if config.sigma_t is not None:
        return float(config.sigma_t)
    background = TBackground.standard(config.nu, config.dim)
    knots = KnotGrid(config.knots)
    sigma_t, _ = calibrate_sigma_t(background, knots,
                                   config.base_seed + _CALIBRATION_SEED_OFFSET)
    return sigma_t


def _comparisons(scored, stat, result, glrt_bkg, glrt_tgt):
    """Per-knot statistic values of the four detectors."""
    K = scored.K
    clair = np.empty(K)
    glrt = np.empty(K)
    for k in range(K):
        cb, ct = scored.clairvoyant_pair(k)
        clair[k] = evaluate_arrays(stat, cb, ct)
        glrt[k] = evaluate_arrays(stat, glrt_bkg, glrt_tgt[k])
    return {
        "clairvoyant": clair,
        "glrt": glrt,
        "rglrt": result.baseline.copy(),
        "bayes": result.final.values.copy(),
    }


def run_trials(config: ExperimentConfig) -> ExperimentResult:
    """Run the full trial grid for a config.

    For each trial: draw a matched pair set from the trial seed, score it
    once, then for each statistic sculpt a prior and evaluate the four
    detectors at every knot.  Statistics within a trial reuse the trial's
    sample (the draws are seed-determined, so a per-statistic redraw would
    produce the identical sample; sharing just skips the recompute).

    Returns:
        ExperimentResult with per-(trial, statistic) results and per-
        statistic aggregates.
    """
    background = TBackground.standard(config.nu, config.dim)
    sigma_t = calibrate(config)
    signature = TargetSignature.from_sigma(background, sigma_t)
    knots = KnotGrid(config.knots)
    stats = [parse_statistic(s) for s in config.statistics]

    trials = []
    for i in range(config.trials):
        seed = config.base_seed + i
        try:
            rng = np.random.default_rng(seed)
            pairs = make_matched_pairs(background, signature, knots,
                                       config.n_pairs, rng, seed=seed)
            scored = ScoredPairs(pairs, background, signature)
            glrt_bkg = glrt_score(pairs.bkg, background, signature)
            glrt_tgt = [glrt_score(p, background, signature) for p in pairs.tgt]
        except Exception as exc:  # recorded, not dropped
            logger.exception("trial %d failed while sampling/scoring", i)
            for stat in stats:
                trials.append(TrialResult(index=i, seed=seed, statistic=str(stat),
                                          sculpt=None, comparisons=None,
                                          wall_time=0.0, error=repr(exc)))
            continue
        for j, stat in enumerate(stats):
            t0 = time.perf_counter()
            try:
                restart_rng = np.random.default_rng([seed, j])
                result = random_restart_babysteps(
                    scored, stat, restarts=config.restarts, rng=restart_rng,
                    step=config.step, iters=config.iters)
                comparisons = _comparisons(scored, stat, result, glrt_bkg, glrt_tgt)
                trials.append(TrialResult(
                    index=i, seed=seed, statistic=str(stat), sculpt=result,
                    comparisons=comparisons,
                    wall_time=time.perf_counter() - t0))
            except Exception as exc:
                logger.exception("trial %d statistic %s failed", i, stat)
                trials.append(TrialResult(index=i, seed=seed, statistic=str(stat),
                                          sculpt=None, comparisons=None,
                                          wall_time=time.perf_counter() - t0,
                                          error=repr(exc)))
        del scored, pairs, glrt_bkg, glrt_tgt
    aggregates = [_aggregate(str(stat), knots, trials) for stat in stats]
    return ExperimentResult(config=config, sigma_t=sigma_t,
                            abundances=knots.abundances.copy(),
                            trials=trials, aggregates=aggregates)


def _aggregate(stat_name, knots, trials):
    """Fixed-order reduction over the successful trials of one statistic."""
    rows = [t for t in trials if t.statistic == stat_name and t.error is None]
    K = knots.K
    if not rows:
        return StatisticAggregate(statistic=stat_name,
                                  abundances=knots.abundances.copy(),
                                  mean_weights=np.full(K, np.nan),
                                  se_weights=np.full(K, np.nan),
                                  success_fraction=0.0,
                                  mean_values={}, mean_delta={}, n_trials=0)
    W = np.stack([t.sculpt.weights.w for t in rows])
    T = W.shape[0]
    mean_w = W.mean(axis=0)
    se_w = W.std(axis=0, ddof=1) / np.sqrt(T) if T > 1 else np.zeros(K)
    success = np.mean([t.sculpt.success for t in rows])
    mean_values = {}
    mean_delta = {}
    for name in DETECTOR_NAMES:
        V = np.stack([t.comparisons[name] for t in rows])
        R = np.stack([t.comparisons["rglrt"] for t in rows])
        mean_values[name] = V.mean(axis=0)
        mean_delta[name] = (V - R).mean(axis=0)
    return StatisticAggregate(statistic=stat_name,
                              abundances=knots.abundances.copy(),
                              mean_weights=mean_w, se_weights=se_w,
                              success_fraction=float(success),
                              mean_values=mean_values, mean_delta=mean_delta,
                              n_trials=T)


def knot_sweep(config: ExperimentConfig, k_values=None):
    """run_trials at each knot count; returns list of (K, ExperimentResult)."""
    if k_values is None:
        k_values = DEFAULT_KNOT_SWEEP
    out = []
    for K in k_values:
        cfg = dataclasses.replace(config, knots=int(K))
        logger.info("knot sweep: K=%d", K)
        out.append((int(K), run_trials(cfg)))
    return out


def result_to_dict(result: ExperimentResult):
    """Deterministic JSON form of a run (wall times excluded by design:
    they would break bit-identical reruns)."""
    return {
        "config": result.config.to_dict(),
        "config_hash": result.config.config_hash,
        "sigma_t": result.sigma_t,
        "abundances": result.abundances.tolist(),
        "trials": [
            {
                "index": t.index,
                "seed": t.seed,
                "statistic": t.statistic,
                "error": t.error,
                "sculpt": None if t.sculpt is None else t.sculpt.to_dict(seed=t.seed),
                "comparisons": None if t.comparisons is None else
                    {k: v.tolist() for k, v in t.comparisons.items()},
            }
            for t in result.trials
        ],
        "aggregates": [
            {
                "statistic": a.statistic,
                "abundances": a.abundances.tolist(),
                "mean_weights": a.mean_weights.tolist(),
                "se_weights": a.se_weights.tolist(),
                "success_fraction": a.success_fraction,
                "mean_values": {k: v.tolist() for k, v in a.mean_values.items()},
                "mean_delta": {k: v.tolist() for k, v in a.mean_delta.items()},
                "n_trials": a.n_trials,
            }
            for a in result.aggregates
        ],
    }


def result_from_dict(d) -> ExperimentResult:
    """Rebuild an ExperimentResult from its JSON form (for report replay)."""
    config = ExperimentConfig.from_dict(d["config"])
    trials = []
    for td in d["trials"]:
        sculpt = None
        if td["sculpt"] is not None:
            sd = td["sculpt"]
            per_knot = np.asarray(sd["per_knot"])
            final = LossReport(loss=float(sd["loss"]), per_knot=per_knot,
                               values=np.asarray(sd["values"]),
                               argmax_knot=int(np.argmax(per_knot)))
            sculpt = SculptResult(
                weights=PriorWeights(np.asarray(sd["weights"])), final=final,
                trajectory=np.asarray(sd["trajectory"]),
                iterations=int(sd["iterations"]), step=float(sd["step"]),
                baseline=np.asarray(sd["baseline"]),
                tolerance=float(sd["tolerance"]), success=bool(sd["success"]),
                abundances=None if sd["abundances"] is None
                    else np.asarray(sd["abundances"]))
        comparisons = None
        if td["comparisons"] is not None:
            comparisons = {k: np.asarray(v) for k, v in td["comparisons"].items()}
        trials.append(TrialResult(index=int(td["index"]), seed=int(td["seed"]),
                                  statistic=td["statistic"], sculpt=sculpt,
                                  comparisons=comparisons, wall_time=0.0,
                                  error=td["error"]))
    aggregates = []
    for ad in d["aggregates"]:
        aggregates.append(StatisticAggregate(
            statistic=ad["statistic"], abundances=np.asarray(ad["abundances"]),
            mean_weights=np.asarray(ad["mean_weights"]),
            se_weights=np.asarray(ad["se_weights"]),
            success_fraction=float(ad["success_fraction"]),
            mean_values={k: np.asarray(v) for k, v in ad["mean_values"].items()},
            mean_delta={k: np.asarray(v) for k, v in ad["mean_delta"].items()},
            n_trials=int(ad["n_trials"])))
    return ExperimentResult(config=config, sigma_t=float(d["sigma_t"]),
                            abundances=np.asarray(d["abundances"]),
                            trials=trials, aggregates=aggregates)
