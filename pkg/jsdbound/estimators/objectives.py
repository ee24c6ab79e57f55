"""Lower-bound objectives and estimators computed from a b x b matrix of discriminator scores.

Row i, column j of the matrix holds T(u_i, v_j). Diagonal entries score joint pairs, the b(b - 1) off-diagonal
entries score pairs drawn from the product of marginals.
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.special import expit, logsumexp, softmax

from jsdbound.bound.xi import LOG2, xi_from_gap
from jsdbound.nets.discriminator import DiscriminatorNet, ForwardCache
from jsdbound.synth.gaussian import SampleBatch
from jsdbound.utils.errors import DomainError, ShapeError

POSTERIOR_EPSILON = 1e-6
SCORE_CLIP = math.log((1 - POSTERIOR_EPSILON) / POSTERIOR_EPSILON)
SMILE_TAU = 1.0


class Estimator(str, Enum):
    JSD_LB = 'jsd_lb'
    MINE = 'mine'
    NWJ = 'nwj'
    CPC = 'cpc'
    SMILE = 'smile'
    TWO_STEP = 'two_step'


# estimators reported from a network trained by another objective
TRAINED_BY = {
    Estimator.JSD_LB: Estimator.JSD_LB,
    Estimator.TWO_STEP: Estimator.JSD_LB,
    Estimator.SMILE: Estimator.JSD_LB,
    Estimator.MINE: Estimator.MINE,
    Estimator.NWJ: Estimator.NWJ,
    Estimator.CPC: Estimator.CPC,
}


def trainer_of(estimator) -> Estimator:
    return TRAINED_BY[Estimator(estimator)]


@dataclass(frozen=True)
class PairedScores:
    """Scores of all b^2 pairs of a batch."""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ShapeError(f'Score matrix must be square, got shape {matrix.shape}')
        if matrix.shape[0] < 2:
            raise ShapeError('At least two samples are needed to form marginal pairs')
        object.__setattr__(self, 'matrix', matrix)

    @classmethod
    def from_parts(cls, joint: np.ndarray, marginal: np.ndarray) -> 'PairedScores':
        """Assemble the matrix from b joint scores and b(b - 1) marginal scores in row-major order."""
        joint = np.asarray(joint, dtype=float)
        marginal = np.asarray(marginal, dtype=float)
        b = joint.size
        if joint.ndim != 1 or marginal.shape != (b * (b - 1),):
            raise ShapeError(f'Expected {b * (b - 1)} marginal scores for {b} joint scores, got {marginal.shape}')
        matrix = np.empty((b, b))
        matrix[np.eye(b, dtype=bool)] = joint
        matrix[~np.eye(b, dtype=bool)] = marginal
        return cls(matrix)

    @property
    def b(self) -> int:
        return self.matrix.shape[0]

    @property
    def joint(self) -> np.ndarray:
        return np.diag(self.matrix).copy()

    @property
    def marginal(self) -> np.ndarray:
        return self.matrix[~np.eye(self.b, dtype=bool)]


def _gradient_matrix(joint_grad: np.ndarray, marginal_grad: np.ndarray) -> np.ndarray:
    b = joint_grad.size
    grad = np.empty((b, b))
    grad[np.eye(b, dtype=bool)] = joint_grad
    grad[~np.eye(b, dtype=bool)] = marginal_grad
    return grad


def pair_inputs(batch: SampleBatch) -> np.ndarray:
    """All b^2 concatenated pairs (u_i, v_j), row-major in (i, j)."""
    b = batch.b
    return np.concatenate([np.repeat(batch.u, b, axis=0), np.tile(batch.v, (b, 1))], axis=1)


def score_batch(batch: SampleBatch, net: DiscriminatorNet) -> Tuple[PairedScores, ForwardCache]:
    if batch.b < 2:
        raise ShapeError('At least two samples are needed to form marginal pairs')
    scores, cache = net.forward_cached(pair_inputs(batch))
    return PairedScores(scores.reshape(batch.b, batch.b)), cache


def split_pairs(batch: SampleBatch, net: DiscriminatorNet) -> PairedScores:
    return score_batch(batch, net)[0]


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def ce_loss_and_grad(scores: PairedScores) -> Tuple[float, np.ndarray]:
    """Balanced binary cross-entropy L_CE and its gradient with respect to the score matrix."""
    b = scores.b
    joint, marginal = scores.joint, scores.marginal
    loss = 0.5 * softplus(-joint).mean() + 0.5 * softplus(marginal).mean()
    grad = _gradient_matrix(-0.5 * expit(-joint) / b, 0.5 * expit(marginal) / marginal.size)
    return float(loss), grad


@dataclass(frozen=True)
class JsdReport:
    jsd_lower: float
    i_ce: float
    clamped: bool = False


def jsd_lb_report(l_ce: float) -> JsdReport:
    """Turn a cross-entropy value into the JSD lower bound log 2 - L_CE and the MI bound Xi of it.

    The bound is evaluated through the gap form ``xi_from_gap(L_CE)``, which avoids the cancellation in
    ``log 2 - L_CE`` for well trained discriminators.
    """
    if math.isnan(l_ce) or l_ce < 0:
        raise DomainError('cross-entropy must be non-negative')
    if l_ce >= LOG2:
        return JsdReport(jsd_lower=0.0, i_ce=0.0, clamped=l_ce > LOG2)
    if l_ce == 0:
        return JsdReport(jsd_lower=LOG2, i_ce=math.inf)
    return JsdReport(jsd_lower=LOG2 - l_ce, i_ce=float(xi_from_gap(l_ce)))


def mine_value_and_grad(scores: PairedScores) -> Tuple[float, np.ndarray]:
    """Donsker-Varadhan bound, mean_joint[s] - log mean_marg[exp(s)]."""
    joint, marginal = scores.joint, scores.marginal
    value = joint.mean() - (logsumexp(marginal) - math.log(marginal.size))
    return float(value), _gradient_matrix(np.full(scores.b, 1.0 / scores.b), -softmax(marginal))


def mine_objective(scores: PairedScores) -> float:
    return mine_value_and_grad(scores)[0]


def nwj_value_and_grad(scores: PairedScores) -> Tuple[float, np.ndarray]:
    joint, marginal = scores.joint, scores.marginal
    tilted = np.exp(marginal - 1.0)
    value = joint.mean() - tilted.mean()
    return float(value), _gradient_matrix(np.full(scores.b, 1.0 / scores.b), -tilted / marginal.size)


def nwj_objective(scores: PairedScores) -> float:
    return nwj_value_and_grad(scores)[0]


def cpc_value_and_grad(all_scores) -> Tuple[float, np.ndarray]:
    """InfoNCE, the row mean of s_ii - log mean_j exp(s_ij); never above log b."""
    matrix = all_scores.matrix if isinstance(all_scores, PairedScores) else PairedScores(all_scores).matrix
    b = matrix.shape[0]
    value = np.mean(np.diag(matrix) - logsumexp(matrix, axis=1)) + math.log(b)
    grad = (np.eye(b) - softmax(matrix, axis=1)) / b
    return float(value), grad


def cpc_objective(all_scores) -> float:
    return cpc_value_and_grad(all_scores)[0]


def smile_value_and_grad(scores: PairedScores, tau: float = SMILE_TAU) -> Tuple[float, np.ndarray]:
    """MINE with the partition term computed on scores clipped to [-tau, tau]."""
    if math.isnan(tau) or tau < 0:
        raise DomainError('tau must be non-negative')
    joint, marginal = scores.joint, scores.marginal
    clipped = np.clip(marginal, -tau, tau)
    value = joint.mean() - (logsumexp(clipped) - math.log(marginal.size))
    inside = (marginal > -tau) & (marginal < tau)
    return float(value), _gradient_matrix(np.full(scores.b, 1.0 / scores.b), -softmax(clipped) * inside)


def smile_estimate(scores: PairedScores, tau: float = SMILE_TAU) -> float:
    return smile_value_and_grad(scores, tau)[0]


def two_step_from_scores(joint_scores, weights: Optional[np.ndarray] = None) -> float:
    """Mean posterior logit over joint samples, with scores clamped to the logits of [eps, 1 - eps].

    ``weights`` turns the mean into a weighted average, e.g. exact cell probabilities of a discrete table.
    """
    clipped = np.clip(np.asarray(joint_scores, dtype=float), -SCORE_CLIP, SCORE_CLIP)
    if weights is None:
        return float(clipped.mean())
    weights = np.asarray(weights, dtype=float)
    if weights.shape != clipped.shape:
        raise ShapeError(f'weights shape {weights.shape} does not match scores {clipped.shape}')
    support = weights > 0
    return float(np.sum(weights[support] * clipped[support]) / weights.sum())


def two_step_estimate(scores: PairedScores) -> float:
    return two_step_from_scores(scores.joint)


def _negated(value_and_grad: Callable[[PairedScores], Tuple[float, np.ndarray]]):
    def loss_and_grad(scores: PairedScores) -> Tuple[float, np.ndarray]:
        value, grad = value_and_grad(scores)
        return -value, -grad

    return loss_and_grad


# loss minimised by each trainer, with the gradient with respect to the score matrix
LOSSES: Dict[Estimator, Callable[[PairedScores], Tuple[float, np.ndarray]]] = {
    Estimator.JSD_LB: ce_loss_and_grad,
    Estimator.MINE: _negated(mine_value_and_grad),
    Estimator.NWJ: _negated(nwj_value_and_grad),
    Estimator.CPC: _negated(cpc_value_and_grad),
}
