"""Sculpting loop: the loss, the cached score layout, and babysteps.

The cache checks insist on bit identity with the direct computation: the
optimizer must not see different numbers because of the memory layout.
"""
from types import SimpleNamespace

import numpy as np
import pytest

import priorsculpt.sculpt as sculpt_mod
from priorsculpt import (KnotGrid, PriorWeights, RocStatistic, ScorePair,
                         ScoredPairs, TBackground, TargetSignature, babysteps,
                         bayes_loss, evaluate, make_matched_pairs,
                         random_restart_babysteps, rglrt_baseline,
                         score_matrix)


@pytest.fixture(scope="module")
def scored5():
    bg = TBackground.standard(3.0, 9)
    sig = TargetSignature.from_sigma(bg, 4.0)
    knots = KnotGrid(5)
    pairs = make_matched_pairs(bg, sig, knots, 4000, np.random.default_rng(0))
    return ScoredPairs(pairs, bg, sig), pairs, bg, sig, knots


STAT = RocStatistic.one_minus_dr_at_far(0.05)


def test_cache_bit_identity(scored5):
    scored, pairs, bg, sig, knots = scored5
    w = PriorWeights.random(5, np.random.default_rng(1))
    sm_bkg = score_matrix(pairs.bkg, knots, bg, sig)
    assert np.array_equal(scored.rglrt_bkg(), sm_bkg.rglrt())
    assert np.array_equal(scored.bayes_bkg(w.w), sm_bkg.bayes(w))
    for k in range(5):
        sm_t = score_matrix(pairs.tgt[k], knots, bg, sig)
        assert np.array_equal(scored.rglrt_tgt(k), sm_t.rglrt())
        assert np.array_equal(scored.bayes_tgt(k, w.w), sm_t.bayes(w))
        cb, ct = scored.clairvoyant_pair(k)
        assert np.array_equal(cb, sm_bkg.column(k))
        assert np.array_equal(ct, sm_t.column(k))


def test_rglrt_baseline_matches_direct(scored5):
    scored, pairs, bg, sig, knots = scored5
    base = rglrt_baseline(scored, STAT)
    assert base.shape == (5,)
    sm_bkg = score_matrix(pairs.bkg, knots, bg, sig).rglrt()
    for k in range(5):
        sm_t = score_matrix(pairs.tgt[k], knots, bg, sig).rglrt()
        want = evaluate(STAT, ScorePair(sm_bkg, sm_t))
        assert base[k] == want


def test_bayes_loss_structure(scored5):
    scored, *_ = scored5
    base = rglrt_baseline(scored, STAT)
    w = PriorWeights.uniform(5)
    rep = bayes_loss(w, scored, STAT, base)
    assert rep.loss == rep.per_knot.max()
    assert rep.per_knot.shape == (5,)
    np.testing.assert_allclose(rep.per_knot, rep.values - base, rtol=1e-15)
    assert rep.argmax_knot == int(np.argmax(rep.per_knot))
    assert rep.loss >= rep.per_knot.min()
    # PriorWeights and plain vector must take the same path
    rep2 = bayes_loss(w.w, scored, STAT, base)
    assert rep2.loss == rep.loss
    assert np.array_equal(rep2.per_knot, rep.per_knot)


def test_update_arithmetic_frozen(monkeypatch):
    # isolate the simplex update: with the worst knot forced to index 0,
    # one step from [0.5, 0.5] lands exactly on [0.51, 0.5] / 1.01
    def fake_loss(w, scored, stat, baseline):
        w = w.w if isinstance(w, PriorWeights) else w
        return sculpt_mod.LossReport(loss=1.0 - float(w[0]),
                                     per_knot=np.array([1.0 - w[0], 0.0]),
                                     values=np.zeros(2), argmax_knot=0)

    monkeypatch.setattr(sculpt_mod, "bayes_loss", fake_loss)
    stub = SimpleNamespace(K=2, knots=KnotGrid(2))
    res = sculpt_mod.babysteps(stub, STAT, step=0.01, iters=1,
                               baseline=np.zeros(2), tolerance=-1.0)
    np.testing.assert_allclose(res.weights.w, [0.51 / 1.01, 0.5 / 1.01],
                               rtol=1e-15)
    assert res.trajectory.shape == (2,)
    assert res.iterations == 1
    assert not res.success  # tolerance forced below any achievable loss


def test_k1_loss_exactly_zero():
    bg = TBackground.standard(3.0, 9)
    sig = TargetSignature.from_sigma(bg, 4.0)
    knots = KnotGrid(1)
    pairs = make_matched_pairs(bg, sig, knots, 2000, np.random.default_rng(2))
    scored = ScoredPairs(pairs, bg, sig)
    res = babysteps(scored, STAT, iters=5)
    assert res.final.loss == 0.0
    assert res.final.per_knot[0] == 0.0
    assert res.weights.w[0] == 1.0
    assert res.success


def test_babysteps_best_so_far(scored5):
    scored, *_ = scored5
    res = babysteps(scored, STAT, iters=40)
    assert res.trajectory.shape == (41,)
    assert res.final.loss == res.trajectory.min()
    # the reported weights reproduce the reported loss exactly
    base = rglrt_baseline(scored, STAT)
    again = bayes_loss(res.weights, scored, STAT, base)
    assert again.loss == res.final.loss
    assert np.array_equal(again.per_knot, res.final.per_knot)
    assert res.success == (res.final.loss <= res.tolerance)
    np.testing.assert_allclose(res.abundances, [0.1, 0.3, 0.5, 0.7, 0.9],
                               rtol=1e-15)


def test_babysteps_w0_respected(scored5):
    scored, *_ = scored5
    w0 = PriorWeights(np.array([0.7, 0.1, 0.1, 0.05, 0.05]))
    base = rglrt_baseline(scored, STAT)
    res = babysteps(scored, STAT, iters=3, w0=w0)
    assert res.trajectory[0] == bayes_loss(w0, scored, STAT, base).loss


def test_restarts_single_equals_plain(scored5):
    scored, *_ = scored5
    plain = babysteps(scored, STAT, iters=30)
    one = random_restart_babysteps(scored, STAT, restarts=1,
                                   rng=np.random.default_rng(3), iters=30)
    assert np.array_equal(plain.weights.w, one.weights.w)
    assert np.array_equal(plain.trajectory, one.trajectory)


def test_restarts_monotone_and_reproducible(scored5):
    scored, *_ = scored5
    r1 = random_restart_babysteps(scored, STAT, restarts=1,
                                  rng=np.random.default_rng(4), iters=30)
    r3 = random_restart_babysteps(scored, STAT, restarts=3,
                                  rng=np.random.default_rng(4), iters=30)
    assert r3.final.loss <= r1.final.loss
    r3b = random_restart_babysteps(scored, STAT, restarts=3,
                                   rng=np.random.default_rng(4), iters=30)
    assert np.array_equal(r3.weights.w, r3b.weights.w)
    assert r3.final.loss == r3b.final.loss


def test_sculpt_success_majority_desk_scale():
    # three seeded trials at n=1e5: the sculpted loss should clear the
    # two-standard-error bar in a majority
    bg = TBackground.standard(3.0, 9)
    sig = TargetSignature.from_sigma(bg, 4.0)
    knots = KnotGrid(5)
    wins = 0
    for seed in range(3):
        pairs = make_matched_pairs(bg, sig, knots, 100_000,
                                   np.random.default_rng(seed))
        scored = ScoredPairs(pairs, bg, sig)
        res = babysteps(scored, STAT, iters=300)
        wins += bool(res.success)
    assert wins >= 2


def test_zero_iters(scored5):
    scored, *_ = scored5
    res = babysteps(scored, STAT, iters=0)
    assert res.trajectory.shape == (1,)
    np.testing.assert_allclose(res.weights.w, 0.2, rtol=1e-15)


def test_result_to_dict(scored5):
    scored, *_ = scored5
    res = babysteps(scored, STAT, iters=5)
    blob = res.to_dict(seed=17, config_hash="abc")
    assert blob["seed"] == 17
    assert blob["config_hash"] == "abc"
    assert blob["weights"] == res.weights.w.tolist()
    assert blob["loss"] == res.final.loss
    assert len(blob["trajectory"]) == 6
