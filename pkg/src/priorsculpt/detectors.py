"""Detection statistics on the (m, r) plane.

All detectors are monotone functions of likelihood ratios between the
implant family and the raw background:

  * clairvoyant: log LR at one known abundance,
  * glrt: log LR maximized over the continuous abundance interval,
  * rglrt: log LR maximized over a finite knot grid,
  * bayes: log of the prior-weighted average of knot LRs,
  * maxq: log of the largest prior-weighted knot LR.

The knot-indexed scores share one n-by-K matrix of log LRs; computing it
once per sample is what makes repeated prior evaluations cheap.
"""
from __future__ import annotations

import numpy as np

from ._validation import as_float_array, check_index, check_rng, check_scalar
from .background import TBackground
from .targets import MfrPoints, TargetSignature

__all__ = [
    "KnotGrid",
    "PriorWeights",
    "ScoreMatrix",
    "log_lr",
    "log_lr_mr",
    "score_matrix",
    "clairvoyant_score",
    "glrt_score",
    "rglrt_score",
    "bayes_score",
    "maxq_score",
]

# Largest abundance the continuous maximizer will consider; the log LR
# diverges to -inf as a -> 1 for generic points but is unbounded on a
# measure-zero set, so the search stays strictly inside [0, 1).
GLRT_A_MAX = 1.0 - 1e-6
GLRT_GRID = 512
GLRT_TOL = 1e-8

# Weight vectors must sit on the simplex up to this slack.
SIMPLEX_ATOL = 1e-12


class KnotGrid:
    """K abundances at the midpoints of a uniform partition of (0, 1).

    a_k = (k - 1/2) / K for k = 1..K, so every knot is interior and the
    grid never touches the a = 1 boundary where the implant degenerates.
    """

    def __init__(self, K):
        self.K = check_index(K, "K", minimum=1)
        k = np.arange(1, self.K + 1, dtype=np.float64)
        self.abundances = (k - 0.5) / self.K

    def __len__(self):
        return self.K

    def __repr__(self):
        return f"KnotGrid(K={self.K})"


class PriorWeights:
    """A point on the probability simplex over the knots."""

    def __init__(self, w):
        w = as_float_array(w, "w", ndim=1)
        if w.shape[0] < 1:
            raise ValueError("weights must be non-empty")
        if np.any(w < 0.0):
            raise ValueError("weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > SIMPLEX_ATOL:
            raise ValueError(f"weights must sum to 1 within {SIMPLEX_ATOL}, got sum={w.sum()!r}")
        self.w = w
        self.K = w.shape[0]

    @classmethod
    def uniform(cls, K):
        K = check_index(K, "K", minimum=1)
        return cls(np.full(K, 1.0 / K))

    @classmethod
    def random(cls, K, rng):
        """Uniform draw from the simplex via normalized exponentials."""
        K = check_index(K, "K", minimum=1)
        rng = check_rng(rng)
        e = rng.standard_exponential(K)
        return cls(e / e.sum())

    def __repr__(self):
        return f"PriorWeights({np.array2string(self.w, precision=4)})"


def log_lr_mr(a, m, r, nu, dim, sigma_t):
    """Log likelihood ratio kernel in (m, r) coordinates.

    Elementwise in broadcast of a, m, r:

        -d log(1-a) + ((nu+d)/2) [log(nu-2 + m^2 + r^2)
                                  - log(nu-2 + ((m - a sigma_t)^2 + r^2)/(1-a)^2)]

    All score paths (matrix fill, continuous maximizer, oracles) run through
    this one function so their values agree bit for bit.
    """
    a = np.asarray(a, dtype=np.float64)
    if np.any(a < 0.0) or np.any(a >= 1.0):
        raise ValueError("abundance must satisfy 0 <= a < 1")
    m = np.asarray(m, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    one_minus = 1.0 - a
    q0 = m * m + r * r
    dm = m - a * sigma_t
    qa = (dm * dm + r * r) / (one_minus * one_minus)
    half = 0.5 * (nu + dim)
    return (-dim * np.log1p(-a)
            + half * (np.log(nu - 2.0 + q0) - np.log(nu - 2.0 + qa)))


def log_lr(a, points: MfrPoints, background: TBackground,
           signature: TargetSignature):
    """Log likelihood ratio of the abundance-a implant model at each point.

    Args:
        a: abundance in [0, 1) (scalar).
        points: MfrPoints to score.
        background: clutter model supplying nu and d.
        signature: supplies sigma_t.

    Returns:
        (n,) array of log likelihood ratios; identically 0 at a = 0.
    """
    return log_lr_mr(float(a), points.m, points.r,
                     background.nu, background.dim, signature.sigma_t)


def clairvoyant_score(points, background, signature, a):
    """Score knowing the true abundance: log_lr at a."""
    return log_lr(a, points, background, signature)


class ScoreMatrix:
    """Cached n-by-K matrix of log LRs at the knot abundances.

    The row maximum (the rglrt score) and the shifted exponentials used by
    the bayes score are memoized on first use; every prior evaluation after
    the first is a matrix-vector product.
    """

    def __init__(self, llr, knots: KnotGrid):
        llr = as_float_array(llr, "llr", ndim=2)
        if llr.shape[1] != knots.K:
            raise ValueError(f"llr must have {knots.K} columns, got {llr.shape[1]}")
        self.llr = llr
        self.knots = knots
        self._rowmax = None
        self._expshift = None

    @property
    def n(self):
        return self.llr.shape[0]

    def rowmax(self):
        if self._rowmax is None:
            self._rowmax = self.llr.max(axis=1)
        return self._rowmax

    def expshift(self):
        """exp(llr - rowmax), entries in (0, 1] with one 1 per row."""
        if self._expshift is None:
            self._expshift = np.exp(self.llr - self.rowmax()[:, None])
        return self._expshift

    def rglrt(self):
        """Knot-restricted GLRT scores: per-row max of the matrix."""
        return self.rowmax()

    def bayes(self, weights):
        w = weights.w if isinstance(weights, PriorWeights) else np.asarray(weights)
        return bayes_from_parts(self.rowmax(), self.expshift(), w)

    def maxq(self, weights):
        w = weights.w if isinstance(weights, PriorWeights) else np.asarray(weights)
        logw = np.full(w.shape, -np.inf)
        nz = w > 0.0
        logw[nz] = np.log(w[nz])
        return (self.llr + logw).max(axis=1)

    def column(self, k):
        """Clairvoyant scores at knot k."""
        return self.llr[:, k]


def bayes_from_parts(rowmax, expshift, w):
    """log sum_k w_k exp(llr_k) from the memoized pieces.

    Stable because expshift <= 1; exact -inf never occurs for w on the
    simplex since the maximizing column contributes w_k * 1.
    """
    return rowmax + np.log(expshift @ w)


def score_matrix(points: MfrPoints, knots: KnotGrid, background: TBackground,
                 signature: TargetSignature) -> ScoreMatrix:
    """Fill the n-by-K log LR matrix one knot column at a time."""
    llr = np.empty((len(points), knots.K))
    for k, a in enumerate(knots.abundances):
        llr[:, k] = log_lr(a, points, background, signature)
    return ScoreMatrix(llr, knots)


def rglrt_score(points, background, signature, knots):
    """Restricted GLRT without keeping the matrix around."""
    return score_matrix(points, knots, background, signature).rglrt()


def bayes_score(points, background, signature, knots, weights):
    return score_matrix(points, knots, background, signature).bayes(weights)


def maxq_score(points, background, signature, knots, weights):
    return score_matrix(points, knots, background, signature).maxq(weights)


def glrt_score(points: MfrPoints, background: TBackground,
               signature: TargetSignature, *, grid=GLRT_GRID, tol=GLRT_TOL,
               a_max=GLRT_A_MAX, return_argmax=False):
    """GLRT over the continuous abundance interval [0, a_max].

    A uniform grid scan locates the best bracket for every point at once,
    then a vectorized golden-section refinement polishes each point's
    abundance to within tol.  The grid contains a = 0 where the log LR is
    exactly zero, so scores are never negative.  The log LR is smooth in a
    with few local maxima for this family; grid + refinement is reliable at
    this resolution.

    Args:
        points: MfrPoints to score.
        background, signature: model objects.
        grid: number of scan abundances.
        tol: bracket width at which refinement stops.
        a_max: upper end of the search interval, strictly below 1.
        return_argmax: also return the maximizing abundances.

    Returns:
        (n,) scores, or (scores, argmax) when return_argmax is set.
    """
    grid = check_index(grid, "grid", minimum=2)
    check_scalar(a_max, "a_max", minimum=0.0, maximum=1.0,
                 min_inclusive=False, max_inclusive=False)
    aa = np.linspace(0.0, a_max, grid)
    m, r = points.m, points.r
    nu, dim, sigma_t = background.nu, background.dim, signature.sigma_t

    def f(avec):
        return log_lr_mr(avec, m, r, nu, dim, sigma_t)

    best = np.full(len(points), -np.inf)
    best_idx = np.zeros(len(points), dtype=np.intp)
    for i, a in enumerate(aa):
        vals = f(np.float64(a))
        better = vals > best
        best = np.where(better, vals, best)
        best_idx[better] = i
    best_a = aa[best_idx]

    # Bracket around the winning grid point, clamped at the interval ends.
    lo = aa[np.maximum(best_idx - 1, 0)]
    hi = aa[np.minimum(best_idx + 1, grid - 1)]

    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    width = 2.0 * (a_max / (grid - 1))
    n_iter = int(np.ceil(np.log(width / tol) / np.log(1.0 / inv_phi))) if width > tol else 0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1 = f(x1)
    f2 = f(x2)
    for _ in range(n_iter):
        # Keep [lo, x2] when the left interior point wins (ties keep left,
        # which fixes the landing abundance and keeps reruns bit-identical).
        left = f1 >= f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        shift_x = np.where(left, x1, x2)
        shift_f = np.where(left, f1, f2)
        probe = np.where(left, hi - inv_phi * (hi - lo), lo + inv_phi * (hi - lo))
        fp = f(probe)
        x1 = np.where(left, probe, shift_x)
        f1 = np.where(left, fp, shift_f)
        x2 = np.where(left, shift_x, probe)
        f2 = np.where(left, shift_f, fp)

    # The refined interior points and the grid winner compete for the final
    # value; a = 0 is always on the grid so the result is >= 0.
    scores = best
    argmax = best_a
    for cand_a, cand_f in ((x1, f1), (x2, f2)):
        better = cand_f > scores
        scores = np.where(better, cand_f, scores)
        argmax = np.where(better, cand_a, argmax)
    if return_argmax:
        return scores, argmax
    return scores
