"""Detector family: the log LR kernel against a full-dimension oracle, the
abundance maximizers, and the mixture scores.

The kernel oracle never touches the (m, r) shortcut: it implants in pixel
space and differences log densities, so agreement to 1e-9 relative is an
end-to-end check of the reduction.
"""
import numpy as np
import pytest

from priorsculpt import (KnotGrid, PriorWeights, TBackground, TargetSignature,
                         bayes_score, clairvoyant_score, glrt_score, implant,
                         log_lr, log_lr_mr, maxq_score, mfr_project,
                         rglrt_score, score_matrix)
from priorsculpt.detectors import bayes_from_parts


def full_dim_log_lr(background, t, a, x):
    """Oracle: log P_tgt(a, x) - log P_bkg(x) via the change of variables
    x = (1-a) z + a t, so P_tgt(a, x) = P_bkg((x - a t)/(1 - a)) / (1-a)^d."""
    z = (x - a * t) / (1.0 - a)
    return (background.log_pdf(z) - background.dim * np.log1p(-a)
            - background.log_pdf(x))


@pytest.fixture
def setup9():
    bg = TBackground.standard(3.0, 9)
    sig = TargetSignature.from_sigma(bg, 4.0)
    return bg, sig


def test_knot_grid_midpoints():
    g = KnotGrid(5)
    np.testing.assert_allclose(g.abundances, [0.1, 0.3, 0.5, 0.7, 0.9], rtol=1e-15)
    assert len(g) == 5
    assert KnotGrid(1).abundances[0] == 0.5
    with pytest.raises(ValueError):
        KnotGrid(0)


def test_prior_weights_validation():
    PriorWeights(np.array([0.25, 0.75]))
    with pytest.raises(ValueError):
        PriorWeights(np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        PriorWeights(np.array([-0.1, 1.1]))
    u = PriorWeights.uniform(4)
    np.testing.assert_allclose(u.w, 0.25, rtol=1e-15)
    r = PriorWeights.random(6, np.random.default_rng(0))
    assert r.w.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(r.w > 0)


def test_log_lr_zero_at_a0(setup9):
    bg, sig = setup9
    pts = mfr_project(bg, sig, bg.sample(100, np.random.default_rng(0)))
    out = log_lr(0.0, pts, bg, sig)
    assert np.array_equal(out, np.zeros(100))  # exactly zero, not merely close


@pytest.mark.parametrize("dim", [9, 144])
def test_log_lr_matches_full_dimension(dim):
    bg = TBackground.standard(3.0, dim)
    sig = TargetSignature.from_sigma(bg, 4.0)
    t = bg.chol[:, 0] * 4.0
    rng = np.random.default_rng(21)
    x = bg.sample(1000, rng)
    pts = mfr_project(bg, sig, x)
    for a in (0.05, 0.3, 0.5, 0.9, 0.99):
        got = log_lr(a, pts, bg, sig)
        want = full_dim_log_lr(bg, t, a, x)
        np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-9)


def test_log_lr_positive_on_target_line(setup9):
    # a pixel sitting exactly on the signature scores target-like for every a
    for sigma_t in (2.0, 4.0, 10.0, 25.0):
        a_grid = np.linspace(1e-6, 1 - 1e-6, 2001)
        vals = log_lr_mr(a_grid[:, None], np.array([[sigma_t]]), np.array([[0.0]]),
                         3.0, 9, sigma_t)
        assert np.all(vals > 0)


def test_log_lr_rejects_bad_a(setup9):
    bg, sig = setup9
    pts = mfr_project(bg, sig, bg.sample(3, np.random.default_rng(0)))
    with pytest.raises(ValueError):
        log_lr(1.0, pts, bg, sig)
    with pytest.raises(ValueError):
        log_lr(-0.2, pts, bg, sig)


def test_score_matrix_columns(setup9):
    bg, sig = setup9
    knots = KnotGrid(4)
    pts = mfr_project(bg, sig, bg.sample(50, np.random.default_rng(1)))
    sm = score_matrix(pts, knots, bg, sig)
    assert sm.llr.shape == (50, 4)
    for k, a in enumerate(knots.abundances):
        assert np.array_equal(sm.column(k), log_lr(a, pts, bg, sig))
    # identical points give identical rows
    m = np.array([1.0, 1.0]); r = np.array([2.0, 2.0])
    from priorsculpt import MfrPoints
    sm2 = score_matrix(MfrPoints(m=m, r=r), knots, bg, sig)
    assert np.array_equal(sm2.llr[0], sm2.llr[1])


def test_score_matrix_k1(setup9):
    bg, sig = setup9
    knots = KnotGrid(1)
    pts = mfr_project(bg, sig, bg.sample(20, np.random.default_rng(2)))
    sm = score_matrix(pts, knots, bg, sig)
    col = log_lr(0.5, pts, bg, sig)
    assert np.array_equal(sm.llr[:, 0], col)
    assert np.array_equal(sm.rglrt(), col)
    assert np.array_equal(sm.bayes(PriorWeights(np.array([1.0]))), col)


def test_rglrt_is_rowmax(setup9):
    bg, sig = setup9
    knots = KnotGrid(5)
    pts = mfr_project(bg, sig, bg.sample(200, np.random.default_rng(3)))
    sm = score_matrix(pts, knots, bg, sig)
    assert np.array_equal(sm.rglrt(), sm.llr.max(axis=1))
    assert np.array_equal(sm.rglrt(), rglrt_score(pts, bg, sig, knots))


def test_bayes_shift_invariance(setup9):
    # adding a constant to every entry shifts the mixture score by it
    rng = np.random.default_rng(4)
    llr = rng.standard_normal((30, 5))
    from priorsculpt import ScoreMatrix
    knots = KnotGrid(5)
    w = PriorWeights.random(5, rng)
    base = ScoreMatrix(llr, knots).bayes(w)
    shifted = ScoreMatrix(llr + 3.7, knots).bayes(w)
    np.testing.assert_allclose(shifted, base + 3.7, rtol=1e-12)


def test_bayes_constant_rows(setup9):
    from priorsculpt import ScoreMatrix
    knots = KnotGrid(3)
    llr = np.full((7, 3), -1.25)
    w = PriorWeights.uniform(3)
    np.testing.assert_allclose(ScoreMatrix(llr, knots).bayes(w), -1.25, rtol=1e-12)


def test_bayes_from_parts_single_path(setup9):
    # the cached-parts entry point must be bit-identical to the direct one
    bg, sig = setup9
    knots = KnotGrid(5)
    pts = mfr_project(bg, sig, bg.sample(500, np.random.default_rng(5)))
    sm = score_matrix(pts, knots, bg, sig)
    w = PriorWeights.random(5, np.random.default_rng(6))
    direct = sm.bayes(w)
    parts = bayes_from_parts(sm.rowmax(), sm.expshift(), w.w)
    assert np.array_equal(direct, parts)


def test_maxq_relations(setup9):
    bg, sig = setup9
    knots = KnotGrid(5)
    pts = mfr_project(bg, sig, bg.sample(300, np.random.default_rng(7)))
    sm = score_matrix(pts, knots, bg, sig)
    u = PriorWeights.uniform(5)
    np.testing.assert_allclose(sm.maxq(u), sm.rglrt() + np.log(1 / 5),
                               rtol=1e-12, atol=1e-12)
    # indicator weights pick out one column
    e2 = np.zeros(5); e2[2] = 1.0
    np.testing.assert_allclose(sm.maxq(PriorWeights(e2)), sm.llr[:, 2],
                               rtol=1e-12, atol=1e-12)
    # maxq <= rglrt always (log weights are nonpositive)
    w = PriorWeights.random(5, np.random.default_rng(8))
    assert np.all(sm.maxq(w) <= sm.rglrt() + 1e-12)
    assert np.array_equal(sm.maxq(w), maxq_score(pts, bg, sig, knots, w))


def test_ordering_chain(setup9):
    # bayes <= rglrt <= glrt pointwise
    bg, sig = setup9
    knots = KnotGrid(5)
    pts = mfr_project(bg, sig, bg.sample(2000, np.random.default_rng(9)))
    sm = score_matrix(pts, knots, bg, sig)
    w = PriorWeights.random(5, np.random.default_rng(10))
    b = sm.bayes(w)
    rg = sm.rglrt()
    g = glrt_score(pts, bg, sig)
    assert np.all(b <= rg + 1e-12)
    assert np.all(rg <= g + 1e-9)
    assert np.array_equal(b, bayes_score(pts, bg, sig, knots, w))


def test_glrt_nonnegative_and_null_argmax(setup9):
    bg, sig = setup9
    # background-typical points: radius near the typical whitened norm
    # (E[|y|^2] = d) and no pull toward the target line
    from priorsculpt import MfrPoints
    pts = MfrPoints(m=np.array([-1.0, 0.0, -0.5]), r=np.array([2.0, 3.0, 2.5]))
    score, amax = glrt_score(pts, bg, sig, return_argmax=True)
    assert np.all(score >= 0.0)
    np.testing.assert_allclose(score, 0.0, atol=1e-7)
    np.testing.assert_allclose(amax, 0.0, atol=1e-3)


@pytest.mark.parametrize("a0", [0.5, 0.9])
def test_glrt_argmax_recovers_noiseless_implant(a0):
    # a noiseless implanted pixel (z = 0) has its maximizing abundance within
    # 1e-3 of the implant value once sigma_t is large; verified against a
    # dense 1e5-point grid oracle before freezing
    bg = TBackground.standard(3.0, 9)
    sig = TargetSignature.from_sigma(bg, 25.0)
    from priorsculpt import MfrPoints
    pts = MfrPoints(m=np.array([a0 * 25.0]), r=np.array([0.0]))
    score, amax = glrt_score(pts, bg, sig, return_argmax=True)
    assert abs(amax[0] - a0) < 1e-3

    grid = np.linspace(0.0, 1 - 1e-6, 100_001)
    dense = log_lr_mr(grid[:, None], pts.m[None, :], pts.r[None, :],
                      3.0, 9, 25.0)
    assert score[0] >= dense.max() - 1e-9


def test_glrt_matches_dense_grid(setup9):
    bg, sig = setup9
    pts = mfr_project(bg, sig, bg.sample(50, np.random.default_rng(12)))
    score = glrt_score(pts, bg, sig)
    grid = np.linspace(0.0, 1 - 1e-6, 100_001)
    dense = log_lr_mr(grid[:, None], pts.m[None, :], pts.r[None, :],
                      3.0, 9, sig.sigma_t).max(axis=0)
    # golden section should match or beat a dense grid to fine tolerance
    np.testing.assert_allclose(score, dense, atol=1e-7, rtol=1e-10)
    assert np.all(score >= dense - 1e-9)


def test_clairvoyant_is_llr_at_a(setup9):
    bg, sig = setup9
    pts = mfr_project(bg, sig, bg.sample(40, np.random.default_rng(13)))
    assert np.array_equal(clairvoyant_score(pts, bg, sig, 0.3),
                          log_lr(0.3, pts, bg, sig))
