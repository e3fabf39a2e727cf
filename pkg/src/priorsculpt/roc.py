"""Empirical ROC operating points and area, with a fixed tie convention.

Detection statistics are evaluated without ever building a full curve:

  * dr_at_far(x): threshold at the ceil(N*x)-th largest background score,
    detection counts strictly-greater target scores.
  * far_at_dr(x): the mirror image, thresholding on the target scores.
  * auc: Mann-Whitney estimator, ties credited 0.5.

Every statistic is also exposed in a smaller-is-better orientation
(one-minus-dr-at-far, far-at-dr, one-minus-auc) so that optimization code
can always minimize.  All three are invariant under strictly monotone
transforms of the scores.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import as_float_array, check_scalar

__all__ = [
    "ScorePair",
    "RocStatistic",
    "parse_statistic",
    "dr_at_far",
    "far_at_dr",
    "auc",
    "evaluate",
    "evaluate_arrays",
    "statistic_standard_error",
    "roc_points",
    "write_roc_csv",
]

_KINDS = ("one-minus-dr-at-far", "far-at-dr", "one-minus-auc")


@dataclass(frozen=True)
class ScorePair:
    """Background and target score samples for one operating condition.

    bkg_scores is stored sorted ascending; tgt_scores keeps its input order.
    """

    bkg_scores: np.ndarray
    tgt_scores: np.ndarray

    def __post_init__(self):
        b = as_float_array(self.bkg_scores, "bkg_scores", ndim=1)
        t = as_float_array(self.tgt_scores, "tgt_scores", ndim=1)
        if b.shape[0] == 0 or t.shape[0] == 0:
            raise ValueError("score arrays must be non-empty")
        object.__setattr__(self, "bkg_scores", np.sort(b))
        object.__setattr__(self, "tgt_scores", t)


@dataclass(frozen=True)
class RocStatistic:
    """A named, parameterized ROC summary in smaller-is-better orientation.

    kind: one of 'one-minus-dr-at-far', 'far-at-dr', 'one-minus-auc'.
    x: the operating parameter (a FAR or DR in (0, 1)); None for AUC.
    """

    kind: str
    x: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown statistic kind {self.kind!r}; expected one of {_KINDS}")
        if self.kind == "one-minus-auc":
            if self.x is not None:
                raise ValueError("one-minus-auc takes no parameter")
        else:
            x = check_scalar(self.x, "x", minimum=0.0, maximum=1.0,
                             min_inclusive=False, max_inclusive=False)
            object.__setattr__(self, "x", x)

    @classmethod
    def one_minus_dr_at_far(cls, x):
        return cls("one-minus-dr-at-far", x)

    @classmethod
    def far_at_dr(cls, x):
        return cls("far-at-dr", x)

    @classmethod
    def one_minus_auc(cls):
        return cls("one-minus-auc")

    def __str__(self):
        if self.x is None:
            return self.kind
        return f"{self.kind}:{self.x:g}"

    @property
    def slug(self):
        """Filename-safe form."""
        return str(self).replace(":", "-")


def parse_statistic(text) -> RocStatistic:
    """Parse 'name' or 'name:param' into a RocStatistic.

    Accepts underscores for dashes so shell users need not quote.
    """
    if isinstance(text, RocStatistic):
        return text
    s = str(text).strip().replace("_", "-")
    if ":" in s:
        name, _, param = s.partition(":")
        return RocStatistic(name.strip(), float(param))
    return RocStatistic(s, None)


def _ceil_count(frac, n):
    """Smallest j >= frac * n, guarded against float round-off in the product.

    frac is meant as an exact rational of small denominator (0.05, 0.5, ...);
    one ulp of slack keeps ceil(100 * 0.05) from landing on 6.
    """
    j = int(np.ceil(np.nextafter(frac * n, -np.inf)))
    return max(1, min(n, j))


def _kth_largest(values, j, is_sorted):
    """The j-th largest element (j >= 1), by index when sorted, else by partition."""
    n = values.shape[0]
    if is_sorted:
        return values[n - j]
    return np.partition(values, n - j)[n - j]


def _dr_at_far_arrays(bkg, tgt, far, bkg_sorted):
    eta = _kth_largest(bkg, _ceil_count(far, bkg.shape[0]), bkg_sorted)
    return np.count_nonzero(tgt > eta) / tgt.shape[0]


def _far_at_dr_arrays(bkg, tgt, dr):
    eta = _kth_largest(tgt, _ceil_count(dr, tgt.shape[0]), False)
    return np.count_nonzero(bkg > eta) / bkg.shape[0]


def _auc_arrays(bkg, tgt, bkg_sorted):
    b = bkg if bkg_sorted else np.sort(bkg)
    # Sorted queries keep the binary searches cache-friendly; the counts
    # are only summed, so query order cannot change the value.
    t = np.sort(tgt)
    left = np.searchsorted(b, t, side="left")
    right = np.searchsorted(b, t, side="right")
    wins = int(left.sum(dtype=np.int64))
    ties = int((right - left).sum(dtype=np.int64))
    return (wins + 0.5 * ties) / (bkg.shape[0] * tgt.shape[0])


def dr_at_far(sp: ScorePair, far):
    """Detection rate at a false-alarm rate.

    The threshold is the ceil(N*far)-th largest background score and a
    detection requires a strictly greater target score, so the convention is
    exact for tied and for integer-boundary inputs.

    Args:
        sp: ScorePair.
        far: false-alarm rate in (0, 1).

    Returns:
        Fraction of target scores above the threshold.
    """
    far = check_scalar(far, "far", minimum=0.0, maximum=1.0,
                       min_inclusive=False, max_inclusive=False)
    return _dr_at_far_arrays(sp.bkg_scores, sp.tgt_scores, far, True)


def far_at_dr(sp: ScorePair, dr):
    """False-alarm rate at a detection rate (threshold from target scores)."""
    dr = check_scalar(dr, "dr", minimum=0.0, maximum=1.0,
                      min_inclusive=False, max_inclusive=False)
    return _far_at_dr_arrays(sp.bkg_scores, sp.tgt_scores, dr)


def auc(sp: ScorePair):
    """Area under the ROC curve, Mann-Whitney estimator with 0.5 tie credit."""
    return _auc_arrays(sp.bkg_scores, sp.tgt_scores, True)


def evaluate(stat: RocStatistic, sp: ScorePair):
    """Value of the statistic on a ScorePair (smaller is better)."""
    return evaluate_arrays(stat, sp.bkg_scores, sp.tgt_scores, bkg_sorted=True)


def evaluate_arrays(stat: RocStatistic, bkg_scores, tgt_scores, *, bkg_sorted=False):
    """Same as evaluate, on raw arrays.

    The hot path: selection runs through np.partition when the background
    scores are unsorted, which picks the identical threshold element, so
    values agree exactly with the ScorePair path.
    """
    bkg_scores = np.asarray(bkg_scores, dtype=np.float64)
    tgt_scores = np.asarray(tgt_scores, dtype=np.float64)
    if stat.kind == "one-minus-dr-at-far":
        return 1.0 - _dr_at_far_arrays(bkg_scores, tgt_scores, stat.x, bkg_sorted)
    if stat.kind == "far-at-dr":
        return _far_at_dr_arrays(bkg_scores, tgt_scores, stat.x)
    return 1.0 - _auc_arrays(bkg_scores, tgt_scores, bkg_sorted)


def roc_points(sp: ScorePair):
    """Empirical (FAR, DR) step points, swept over all distinct thresholds.

    Returns two arrays running from (0, 0) at threshold +inf to (1, 1)
    below the smallest score, with one point per distinct score value.
    """
    values = np.unique(np.concatenate([sp.bkg_scores, sp.tgt_scores]))[::-1]
    n_b = sp.bkg_scores.shape[0]
    n_t = sp.tgt_scores.shape[0]
    tgt_sorted = np.sort(sp.tgt_scores)
    far = np.empty(values.shape[0] + 2)
    dr = np.empty(values.shape[0] + 2)
    far[0], dr[0] = 0.0, 0.0
    # count of scores strictly above each threshold
    far[1:-1] = (n_b - np.searchsorted(sp.bkg_scores, values, side="right")) / n_b
    dr[1:-1] = (n_t - np.searchsorted(tgt_sorted, values, side="right")) / n_t
    far[-1], dr[-1] = 1.0, 1.0
    return far, dr


def write_roc_csv(path, sp: ScorePair):
    """Export the step points as a two-column CSV (far, dr)."""
    far, dr = roc_points(sp)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("far,dr\n")
        for f, d in zip(far, dr):
            fh.write(f"{float(f)!r},{float(d)!r}\n")
    return path


def statistic_standard_error(stat: RocStatistic, value, n_bkg, n_tgt):
    """Binomial-scale standard error of an estimated statistic value.

    For the rate statistics this is the usual sqrt(p(1-p)/N) with N the size
    of the sample the rate is measured on.  For AUC it is the Hanley-McNeil
    approximation.  Used to set desk-scale success tolerances, not for
    inference.
    """
    v = float(min(max(value, 0.0), 1.0))
    if stat.kind == "one-minus-dr-at-far":
        return float(np.sqrt(v * (1.0 - v) / n_tgt))
    if stat.kind == "far-at-dr":
        return float(np.sqrt(v * (1.0 - v) / n_bkg))
    a = 1.0 - v
    q1 = a / (2.0 - a)
    q2 = 2.0 * a * a / (1.0 + a)
    var = (a * (1.0 - a) + (n_tgt - 1.0) * (q1 - a * a)
           + (n_bkg - 1.0) * (q2 - a * a)) / (n_bkg * n_tgt)
    return float(np.sqrt(max(var, 0.0)))
