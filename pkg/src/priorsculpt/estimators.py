"""Estimator-style front door: detectors that score pixel arrays, and a
sculptor that learns prior weights from a target-free sample.

Every class follows the fit / decision_function convention with
get_params/set_params from scikit-learn's BaseEstimator, so the pieces
compose with pipelines, grid search, and cloning.  Larger decision-function
values mean "more target-like".
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._validation import as_float_array, check_rng
from .background import TBackground
from .detectors import KnotGrid, PriorWeights, glrt_score, log_lr, score_matrix
from .roc import parse_statistic
from .sculpt import ScoredPairs, random_restart_babysteps
from .targets import MatchedPairSet, TargetSignature, implant_mfr, mfr_project

__all__ = [
    "ClairvoyantDetector",
    "GlrtDetector",
    "RestrictedGlrtDetector",
    "BayesDetector",
    "MaxqDetector",
    "PriorSculptor",
]


def _resolve_model(background, signature, n_features):
    """Materialize (TBackground, TargetSignature) from estimator params.

    background may be a TBackground or None (standard nu=3 model inferred
    from the data dimension); signature may be a TargetSignature or a bare
    sigma_t strength.
    """
    if background is None:
        background = TBackground.standard(3.0, n_features)
    if not isinstance(background, TBackground):
        raise ValueError("background must be a TBackground or None")
    if n_features != background.dim:
        raise ValueError(f"X has {n_features} features, background has dim {background.dim}")
    if signature is None:
        raise ValueError("signature must be a TargetSignature or a sigma_t strength")
    if not isinstance(signature, TargetSignature):
        signature = TargetSignature.from_sigma(background, float(signature))
    return background, signature


class _MfrDetectorMixin:
    """Shared pixel handling for the detector estimators."""

    def _project(self, X):
        X = as_float_array(X, "X", ndim=2)
        background, signature = _resolve_model(self.background, self.signature,
                                               X.shape[1])
        return mfr_project(background, signature, X), background, signature

    def fit(self, X=None, y=None):
        """Stateless: validates parameters when X is given, returns self."""
        if X is not None:
            self._project(np.atleast_2d(as_float_array(X, "X")))
        return self

    def score_samples(self, X):
        return self.decision_function(X)


class ClairvoyantDetector(_MfrDetectorMixin, BaseEstimator):
    """Log likelihood ratio detector that knows the true abundance.

    Args:
        background: TBackground, or None for the standard nu=3 model.
        signature: TargetSignature or a sigma_t strength.
        abundance: the abundance the detector is matched to.
    """

    def __init__(self, background=None, signature=None, abundance=0.5):
        self.background = background
        self.signature = signature
        self.abundance = abundance

    def decision_function(self, X):
        pts, background, signature = self._project(X)
        return log_lr(self.abundance, pts, background, signature)


class GlrtDetector(_MfrDetectorMixin, BaseEstimator):
    """GLRT over the continuous abundance interval."""

    def __init__(self, background=None, signature=None):
        self.background = background
        self.signature = signature

    def decision_function(self, X):
        pts, background, signature = self._project(X)
        return glrt_score(pts, background, signature)


class RestrictedGlrtDetector(_MfrDetectorMixin, BaseEstimator):
    """GLRT restricted to the n_knots midpoint abundances."""

    def __init__(self, background=None, signature=None, n_knots=5):
        self.background = background
        self.signature = signature
        self.n_knots = n_knots

    def decision_function(self, X):
        pts, background, signature = self._project(X)
        return score_matrix(pts, KnotGrid(self.n_knots), background, signature).rglrt()


class BayesDetector(_MfrDetectorMixin, BaseEstimator):
    """Prior-weighted average of knot likelihood ratios.

    weights: simplex vector over the knots; uniform when None.
    """

    def __init__(self, background=None, signature=None, n_knots=5, weights=None):
        self.background = background
        self.signature = signature
        self.n_knots = n_knots
        self.weights = weights

    def _weights(self):
        if self.weights is None:
            return PriorWeights.uniform(self.n_knots)
        if isinstance(self.weights, PriorWeights):
            return self.weights
        return PriorWeights(self.weights)

    def decision_function(self, X):
        pts, background, signature = self._project(X)
        return score_matrix(pts, KnotGrid(self.n_knots), background,
                            signature).bayes(self._weights())


class MaxqDetector(BayesDetector):
    """Largest prior-weighted knot likelihood ratio (log max_k w_k LR_k)."""

    def decision_function(self, X):
        pts, background, signature = self._project(X)
        return score_matrix(pts, KnotGrid(self.n_knots), background,
                            signature).maxq(self._weights())


class PriorSculptor(BaseEstimator):
    """Learn prior weights from a target-free pixel sample.

    fit projects the pixels to (m, r), implants them at every knot, and runs
    the babysteps optimizer so that the resulting bayes detector matches the
    knot-restricted GLRT at every knot under the chosen statistic.  After
    fitting, decision_function scores new pixels with the learned prior.

    Args:
        background: TBackground, or None for the standard nu=3 model at the
            data's dimension.
        signature: TargetSignature or a bare sigma_t strength.
        n_knots: size of the abundance grid.
        statistic: ROC statistic to sculpt against, e.g.
            'one-minus-dr-at-far:0.05', 'far-at-dr:0.5', 'one-minus-auc'.
        step: mass added to the worst knot per iteration.
        n_iters: iteration budget.
        n_restarts: 1 for the uniform start only, more adds random starts.
        random_state: seed or Generator for the restart draws.

    Attributes (after fit):
        knots_: KnotGrid.
        weights_: learned PriorWeights.
        result_: full SculptResult (trajectory, baseline, success flag).
        background_, signature_: resolved model objects.
    """

    def __init__(self, background=None, signature=None, n_knots=5,
                 statistic="one-minus-dr-at-far:0.05", step=0.01,
                 n_iters=500, n_restarts=1, random_state=None):
        self.background = background
        self.signature = signature
        self.n_knots = n_knots
        self.statistic = statistic
        self.step = step
        self.n_iters = n_iters
        self.n_restarts = n_restarts
        self.random_state = random_state

    def fit(self, X, y=None):
        """Sculpt the prior on a target-free sample X of shape (n, d)."""
        X = as_float_array(X, "X", ndim=2)
        background, signature = _resolve_model(self.background, self.signature,
                                               X.shape[1])
        stat = parse_statistic(self.statistic)
        knots = KnotGrid(self.n_knots)
        bkg = mfr_project(background, signature, X)
        tgt = tuple(implant_mfr(bkg, a, signature.sigma_t) for a in knots.abundances)
        pairs = MatchedPairSet(bkg=bkg, tgt=tgt, knots=knots)
        scored = ScoredPairs(pairs, background, signature)
        rng = check_rng(self.random_state)
        result = random_restart_babysteps(scored, stat, restarts=self.n_restarts,
                                          rng=rng, step=self.step,
                                          iters=self.n_iters)
        self.background_ = background
        self.signature_ = signature
        self.knots_ = knots
        self.weights_ = result.weights
        self.result_ = result
        return self

    def decision_function(self, X):
        """Bayes scores of new pixels under the learned prior."""
        if not hasattr(self, "weights_"):
            raise NotFittedError("PriorSculptor must be fitted before scoring")
        X = as_float_array(X, "X", ndim=2)
        pts = mfr_project(self.background_, self.signature_, X)
        return score_matrix(pts, self.knots_, self.background_,
                            self.signature_).bayes(self.weights_)

    def score_samples(self, X):
        return self.decision_function(X)
