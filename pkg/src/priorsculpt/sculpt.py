"""Sculpting delta-comb priors against the knot-restricted GLRT.

The prior is a weight vector w on the knot grid.  For a chosen ROC statistic
s (smaller is better) the per-knot shortfall of the bayes detector against
the restricted GLRT is

    L_k(w) = s(bayes(w); knot k) - s(rglrt; knot k)

and the sculpting loss is max_k L_k(w).  Nonpositive loss means the bayes
detector is at least as good as the rglrt at every knot simultaneously.
The optimizer is a deliberately unsophisticated ascent-on-the-worst-knot
scheme: add a small step of mass to the worst knot, renormalize, repeat,
and keep the best iterate seen.

The restricted-GLRT baseline depends only on the sample, so it is computed
once; each loss evaluation then costs one matrix-vector product per
population against the cached score matrices.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ._validation import check_index, check_rng, check_scalar
from .background import TBackground
from .detectors import (KnotGrid, PriorWeights, bayes_from_parts,
                        score_matrix)
from .roc import RocStatistic, evaluate_arrays, statistic_standard_error
from .targets import MatchedPairSet, TargetSignature

logger = logging.getLogger(__name__)

__all__ = [
    "ScoredPairs",
    "LossReport",
    "SculptResult",
    "rglrt_baseline",
    "bayes_loss",
    "babysteps",
    "random_restart_babysteps",
]

DEFAULT_STEP = 0.01
DEFAULT_ITERS = 500


class _PopulationCache:
    """Memoized score pieces for one population: rglrt scores and shifted
    exponentials, plus the clairvoyant column for its own knot."""

    __slots__ = ("rowmax", "expshift", "own_column")

    def __init__(self, matrix, own_knot=None):
        self.rowmax = matrix.rowmax()
        self.expshift = matrix.expshift()
        self.own_column = matrix.column(own_knot).copy() if own_knot is not None else None

    def bayes(self, w):
        return bayes_from_parts(self.rowmax, self.expshift, w)


class ScoredPairs:
    """A MatchedPairSet with its log-LR score matrices attached.

    Builds the n-by-K matrix for the target-free population and for each
    implanted population exactly once.  The full matrix is kept only for
    the target-free population (its columns are the clairvoyant background
    scores); implanted populations keep the pieces every later evaluation
    needs, which bounds memory at roughly 2 n K scalars per population.
    """

    def __init__(self, pairs: MatchedPairSet, background: TBackground,
                 signature: TargetSignature):
        self.pairs = pairs
        self.knots = pairs.knots
        self.n = pairs.n
        self.background = background
        self.signature = signature
        bkg_matrix = score_matrix(pairs.bkg, self.knots, background, signature)
        self.bkg_llr = bkg_matrix.llr
        self._bkg = _PopulationCache(bkg_matrix)
        self._tgt = []
        for k, pts in enumerate(pairs.tgt):
            matrix = score_matrix(pts, self.knots, background, signature)
            self._tgt.append(_PopulationCache(matrix, own_knot=k))
            del matrix

    @property
    def K(self):
        return self.knots.K

    def rglrt_bkg(self):
        return self._bkg.rowmax

    def rglrt_tgt(self, k):
        return self._tgt[k].rowmax

    def bayes_bkg(self, w):
        return self._bkg.bayes(w)

    def bayes_tgt(self, k, w):
        return self._tgt[k].bayes(w)

    def clairvoyant_pair(self, k):
        """Background and implanted scores of the abundance-k clairvoyant."""
        return self.bkg_llr[:, k], self._tgt[k].own_column


@dataclass(frozen=True)
class LossReport:
    """One evaluation of the sculpting loss.

    loss: max over knots of (bayes value - baseline).
    per_knot: (K,) the individual differences.
    values: (K,) raw bayes statistic values per knot.
    argmax_knot: first knot attaining the max.
    """

    loss: float
    per_knot: np.ndarray
    values: np.ndarray
    argmax_knot: int


@dataclass(frozen=True)
class SculptResult:
    """Outcome of a babysteps run.

    weights are the best iterate visited (smallest loss, earliest on ties);
    final is the loss report of exactly those weights.  trajectory records
    the loss of every visited iterate in order, so its length is iters + 1.
    success compares the best loss against tolerance, which defaults to two
    standard errors of the statistic at the sample size.
    """

    weights: PriorWeights
    final: LossReport
    trajectory: np.ndarray
    iterations: int
    step: float
    baseline: np.ndarray
    tolerance: float
    success: bool
    abundances: np.ndarray = None

    def to_dict(self, *, seed=None, config_hash=None):
        """JSON-ready summary of the run."""
        out = {
            "weights": self.weights.w.tolist(),
            "abundances": None if self.abundances is None else self.abundances.tolist(),
            "loss": self.final.loss,
            "per_knot": self.final.per_knot.tolist(),
            "values": self.final.values.tolist(),
            "baseline": self.baseline.tolist(),
            "trajectory": self.trajectory.tolist(),
            "iterations": self.iterations,
            "step": self.step,
            "tolerance": self.tolerance,
            "success": self.success,
        }
        if seed is not None:
            out["seed"] = int(seed)
        if config_hash is not None:
            out["config_hash"] = config_hash
        return out


def rglrt_baseline(scored: ScoredPairs, stat: RocStatistic):
    """Per-knot statistic values of the restricted GLRT.

    Independent of the prior weights, so callers compute it once per sample
    and reuse it across every loss evaluation.
    """
    base = np.empty(scored.K)
    bkg = scored.rglrt_bkg()
    for k in range(scored.K):
        base[k] = evaluate_arrays(stat, bkg, scored.rglrt_tgt(k))
    return base


def bayes_loss(w, scored: ScoredPairs, stat: RocStatistic, baseline) -> LossReport:
    """Evaluate the sculpting loss of a weight vector.

    Args:
        w: PriorWeights or plain simplex vector of length K.
        scored: cached score matrices for the sample.
        stat: ROC statistic, smaller is better.
        baseline: per-knot rglrt values from rglrt_baseline.

    Returns:
        LossReport; argmax_knot is the lowest index attaining the max.
    """
    w = w.w if isinstance(w, PriorWeights) else np.asarray(w, dtype=np.float64)
    values = np.empty(scored.K)
    # One shared sort; selection on the sorted array picks the same
    # threshold element, so values match the unsorted path bit for bit.
    bkg = np.sort(scored.bayes_bkg(w))
    for k in range(scored.K):
        values[k] = evaluate_arrays(stat, bkg, scored.bayes_tgt(k, w),
                                    bkg_sorted=True)
    per_knot = values - baseline
    j = int(np.argmax(per_knot))
    return LossReport(loss=float(per_knot[j]), per_knot=per_knot,
                      values=values, argmax_knot=j)


def _default_tolerance(scored, stat, baseline):
    """Two standard errors of the statistic, at the worst-case knot."""
    se = max(statistic_standard_error(stat, baseline[k], scored.n, scored.n)
             for k in range(scored.K))
    return 2.0 * se


def babysteps(scored: ScoredPairs, stat: RocStatistic, *, step=DEFAULT_STEP,
              iters=DEFAULT_ITERS, w0=None, tolerance=None,
              baseline=None) -> SculptResult:
    """Greedy worst-knot mass addition with a fixed iteration budget.

    Each iteration adds `step` of weight to the currently worst knot and
    renormalizes by (1 + step).  There is no line search and no stopping
    rule; the returned weights are the best iterate visited, which makes
    the run robust to the sampling noise floor of the loss.

    Args:
        scored: cached score matrices.
        stat: ROC statistic to sculpt against.
        step: mass added per iteration (> 0).
        iters: number of update steps; iters + 1 iterates are evaluated.
        w0: starting weights, uniform when omitted.
        tolerance: success threshold on the loss; two standard errors of
            the statistic when omitted.
        baseline: precomputed rglrt_baseline, recomputed when omitted.

    Returns:
        SculptResult.
    """
    step = check_scalar(step, "step", minimum=0.0, min_inclusive=False)
    iters = check_index(iters, "iters", minimum=0)
    K = scored.K
    if baseline is None:
        baseline = rglrt_baseline(scored, stat)
    if tolerance is None:
        tolerance = _default_tolerance(scored, stat, baseline)
    if w0 is None:
        w0 = PriorWeights.uniform(K)
    w = w0.w.copy()

    trajectory = np.empty(iters + 1)
    best_loss = np.inf
    best_w = w.copy()
    best_report = None
    for i in range(iters + 1):
        report = bayes_loss(w, scored, stat, baseline)
        trajectory[i] = report.loss
        if report.loss < best_loss:
            best_loss = report.loss
            best_w = w.copy()
            best_report = report
        if i == iters:
            break
        w[report.argmax_knot] += step
        w /= 1.0 + step

    logger.debug("babysteps: %d iterations, best loss %.3e (tolerance %.3e)",
                 iters, best_loss, tolerance)
    return SculptResult(weights=PriorWeights(best_w), final=best_report,
                        trajectory=trajectory, iterations=iters, step=step,
                        baseline=baseline, tolerance=float(tolerance),
                        success=bool(best_loss <= tolerance),
                        abundances=scored.knots.abundances.copy())


def random_restart_babysteps(scored: ScoredPairs, stat: RocStatistic, *,
                             restarts=1, rng=None, step=DEFAULT_STEP,
                             iters=DEFAULT_ITERS, tolerance=None) -> SculptResult:
    """babysteps from the uniform start plus restarts - 1 random simplex starts.

    Returns the run with the smallest best loss; ties keep the earliest run,
    so results do not depend on dict ordering or scheduling.
    """
    restarts = check_index(restarts, "restarts", minimum=1)
    rng = check_rng(rng)
    baseline = rglrt_baseline(scored, stat)
    best = None
    for j in range(restarts):
        w0 = PriorWeights.uniform(scored.K) if j == 0 else PriorWeights.random(scored.K, rng)
        result = babysteps(scored, stat, step=step, iters=iters, w0=w0,
                           tolerance=tolerance, baseline=baseline)
        if best is None or result.final.loss < best.final.loss:
            best = result
    return best
