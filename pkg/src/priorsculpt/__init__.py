"""Monte-Carlo workbench for sub-pixel target detection under heavy tails.

The package builds matched background/implant sample pairs under an
elliptical multivariate-t background, scores them with a family of
likelihood-ratio detectors (clairvoyant, GLRT, knot-restricted GLRT,
Bayes mixtures over a delta comb), and tunes the comb weights so the
Bayes detector matches or beats the restricted GLRT on a chosen ROC
statistic at every knot simultaneously.
"""
from .background import TBackground
from .detectors import (KnotGrid, PriorWeights, ScoreMatrix, bayes_score,
                        clairvoyant_score, glrt_score, log_lr, log_lr_mr,
                        maxq_score, rglrt_score, score_matrix)
from .estimators import (BayesDetector, ClairvoyantDetector, GlrtDetector,
                         MaxqDetector, PriorSculptor, RestrictedGlrtDetector)
from .experiment import (CalibrationError, ExperimentConfig, ExperimentResult,
                         StatisticAggregate, TrialResult, calibrate,
                         calibrate_sigma_t, default_statistic_panel,
                         knot_sweep, run_trials)
from .reports import emit_reports, replay_reports
from .roc import (RocStatistic, ScorePair, auc, dr_at_far, evaluate,
                  evaluate_arrays, far_at_dr, parse_statistic, roc_points,
                  statistic_standard_error, write_roc_csv)
from .sculpt import (LossReport, ScoredPairs, SculptResult, babysteps,
                     bayes_loss, random_restart_babysteps, rglrt_baseline)
from .targets import (MatchedPairSet, MfrPoints, TargetSignature, implant,
                      implant_mfr, load_matched_pairs, make_matched_pairs,
                      mfr_project, save_matched_pairs)

__version__ = "0.1.0"

__all__ = [
    "TBackground",
    "TargetSignature", "MfrPoints", "MatchedPairSet",
    "implant", "implant_mfr", "mfr_project",
    "make_matched_pairs", "save_matched_pairs", "load_matched_pairs",
    "KnotGrid", "PriorWeights", "ScoreMatrix",
    "log_lr", "log_lr_mr", "score_matrix",
    "clairvoyant_score", "glrt_score", "rglrt_score", "bayes_score",
    "maxq_score",
    "ScorePair", "RocStatistic", "parse_statistic",
    "dr_at_far", "far_at_dr", "auc", "evaluate", "evaluate_arrays",
    "roc_points", "write_roc_csv", "statistic_standard_error",
    "ScoredPairs", "LossReport", "SculptResult",
    "rglrt_baseline", "bayes_loss", "babysteps", "random_restart_babysteps",
    "ClairvoyantDetector", "GlrtDetector", "RestrictedGlrtDetector",
    "BayesDetector", "MaxqDetector", "PriorSculptor",
    "ExperimentConfig", "ExperimentResult", "TrialResult",
    "StatisticAggregate", "CalibrationError",
    "calibrate", "calibrate_sigma_t", "default_statistic_panel",
    "run_trials", "knot_sweep",
    "emit_reports", "replay_reports",
    "__version__",
]
