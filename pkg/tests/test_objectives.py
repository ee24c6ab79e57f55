import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import expit

from jsdbound.bound import LOG2
from jsdbound.discrete import exact_mi, make_alpha_family, random_joint_table
from jsdbound.estimators import (
    Estimator,
    PairedScores,
    ce_loss_and_grad,
    cpc_objective,
    cpc_value_and_grad,
    jsd_lb_report,
    mine_objective,
    mine_value_and_grad,
    nwj_objective,
    nwj_value_and_grad,
    pair_inputs,
    smile_estimate,
    smile_value_and_grad,
    split_pairs,
    trainer_of,
    two_step_estimate,
    two_step_from_scores,
)
from jsdbound.nets import DiscriminatorNet
from jsdbound.utils.errors import DomainError, ShapeError


def random_scores(b: int, seed: int = 0, scale: float = 5.0) -> PairedScores:
    return PairedScores(np.random.default_rng(seed).uniform(-scale, scale, size=(b, b)))


def constant_scores(b: int, joint: float, marginal: float) -> PairedScores:
    matrix = np.full((b, b), marginal)
    np.fill_diagonal(matrix, joint)
    return PairedScores(matrix)


@pytest.mark.parametrize('b', [2, 64])
def test_split_pairs_counts(small_batch, b):
    batch = small_batch(d=2, b=b)
    scores = split_pairs(batch, DiscriminatorNet.zeros(2, hidden=(3, 3)))
    assert scores.joint.shape == (b,)
    assert scores.marginal.shape == (b * (b - 1),)
    assert np.all(scores.matrix == 0)


def test_split_pairs_needs_two_samples(small_batch):
    with pytest.raises(ShapeError):
        split_pairs(small_batch(b=1), DiscriminatorNet.zeros(2, hidden=(3, 3)))


def test_pair_inputs_layout(small_batch):
    batch = small_batch(d=2, b=3)
    pairs = pair_inputs(batch)
    assert_allclose(pairs[1 * 3 + 2], np.concatenate([batch.u[1], batch.v[2]]))
    assert_allclose(pairs[4], np.concatenate([batch.u[1], batch.v[1]]))


def test_from_parts_round_trip():
    scores = random_scores(5)
    rebuilt = PairedScores.from_parts(scores.joint, scores.marginal)
    assert_allclose(rebuilt.matrix, scores.matrix)


def test_ce_loss_examples():
    assert ce_loss_and_grad(constant_scores(8, 0.0, 0.0))[0] == pytest.approx(LOG2, abs=1e-15)
    assert ce_loss_and_grad(constant_scores(8, 20.0, -20.0))[0] == pytest.approx(2.06e-9, rel=1e-2)


def test_ce_loss_equals_direct_cross_entropy():
    scores = random_scores(10, seed=1)
    q_joint, q_marg = expit(scores.joint), expit(scores.marginal)
    direct = -0.5 * np.mean(np.log(q_joint)) - 0.5 * np.mean(np.log(1 - q_marg))
    assert ce_loss_and_grad(scores)[0] == pytest.approx(direct, abs=1e-10)


def test_jsd_lb_report_examples():
    report = jsd_lb_report(LOG2)
    assert (report.jsd_lower, report.i_ce, report.clamped) == (0.0, 0.0, False)
    report = jsd_lb_report(LOG2 - 0.2157615)
    assert report.jsd_lower == pytest.approx(0.2157615, abs=1e-12)
    assert report.i_ce == pytest.approx(LOG2, abs=1e-6)
    clamped = jsd_lb_report(0.9)
    assert (clamped.jsd_lower, clamped.i_ce, clamped.clamped) == (0.0, 0.0, True)
    with pytest.raises(DomainError):
        jsd_lb_report(-0.1)


def test_mine_examples():
    assert mine_objective(constant_scores(6, 0.0, 0.0)) == pytest.approx(0.0, abs=1e-15)
    assert mine_objective(constant_scores(6, 1.0, 0.0)) == pytest.approx(1.0, abs=1e-15)
    scores = random_scores(7, seed=2)
    naive = scores.joint.mean() - math.log(np.mean(np.exp(scores.marginal)))
    assert mine_objective(scores) == pytest.approx(naive, abs=1e-9)


def test_nwj_examples():
    assert nwj_objective(constant_scores(5, 1.0, 1.0)) == pytest.approx(0.0, abs=1e-15)
    assert nwj_objective(constant_scores(5, 0.0, 0.0)) == pytest.approx(-math.exp(-1), abs=1e-15)


def test_nwj_never_above_mine():
    for seed in range(50):
        scores = random_scores(6, seed=seed, scale=4.0)
        assert nwj_objective(scores) <= mine_objective(scores) + 1e-9


def test_cpc_examples():
    assert cpc_objective(np.full((4, 4), 3.0)) == pytest.approx(0.0, abs=1e-15)
    assert cpc_objective(constant_scores(64, 40.0, -40.0)) == pytest.approx(math.log(64), abs=1e-9)
    matrix = np.random.default_rng(3).normal(size=(8, 8))
    naive = np.mean([matrix[i, i] - math.log(np.mean(np.exp(matrix[i]))) for i in range(8)])
    assert cpc_objective(matrix) == pytest.approx(naive, abs=1e-9)


def test_cpc_cap():
    for seed in range(20):
        assert cpc_objective(random_scores(12, seed=seed, scale=30.0)) <= math.log(12) + 1e-9


def test_smile_examples():
    scores = random_scores(6, seed=4)
    assert smile_estimate(scores, tau=0.0) == pytest.approx(scores.joint.mean(), abs=1e-12)
    assert smile_estimate(scores, tau=1000.0) == pytest.approx(mine_objective(scores), abs=1e-9)
    assert smile_estimate(constant_scores(4, 0.0, 0.0), tau=0.5) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DomainError):
        smile_estimate(scores, tau=-1.0)


def test_two_step_examples():
    assert two_step_estimate(constant_scores(5, 0.0, 3.0)) == 0
    assert two_step_estimate(constant_scores(5, 2.5, -1.0)) == pytest.approx(2.5)
    assert two_step_from_scores(np.array([100.0])) == pytest.approx(math.log((1 - 1e-6) / 1e-6))


@pytest.mark.parametrize('table', [make_alpha_family(4, 0.6), random_joint_table(5, np.random.default_rng(8))])
def test_two_step_recovers_exact_mi_from_log_ratios(table):
    p = table.table
    with np.errstate(divide='ignore'):
        log_ratio = np.log(p) - np.log(table.product)
    assert two_step_from_scores(log_ratio.ravel(), weights=p.ravel()) == pytest.approx(exact_mi(table), abs=1e-12)


def test_weights_shape_checked():
    with pytest.raises(ShapeError):
        two_step_from_scores(np.zeros(3), weights=np.ones(4))


def numeric_matrix_grad(fn, scores: PairedScores, h: float = 1e-6) -> np.ndarray:
    grad = np.zeros_like(scores.matrix)
    for idx in np.ndindex(scores.matrix.shape):
        plus, minus = scores.matrix.copy(), scores.matrix.copy()
        plus[idx] += h
        minus[idx] -= h
        grad[idx] = (fn(PairedScores(plus)) - fn(PairedScores(minus))) / (2 * h)
    return grad


@pytest.mark.parametrize(
    'value_and_grad',
    [ce_loss_and_grad, mine_value_and_grad, nwj_value_and_grad, cpc_value_and_grad, smile_value_and_grad],
)
def test_score_gradients(value_and_grad):
    scores = random_scores(5, seed=9, scale=2.0)
    _, grad = value_and_grad(scores)
    assert_allclose(grad, numeric_matrix_grad(lambda s: value_and_grad(s)[0], scores), atol=1e-8)


def test_trainer_groups():
    assert trainer_of('two_step') is Estimator.JSD_LB
    assert trainer_of(Estimator.SMILE) is Estimator.JSD_LB
    assert trainer_of('cpc') is Estimator.CPC
