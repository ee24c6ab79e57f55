"""One optimisation step of a discriminator under a lower-bound objective."""
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from loguru import logger

from jsdbound.estimators.objectives import (
    LOSSES,
    SMILE_TAU,
    Estimator,
    PairedScores,
    jsd_lb_report,
    score_batch,
    smile_estimate,
    two_step_estimate,
)
from jsdbound.nets.discriminator import AdamState, DiscriminatorNet, Params, adam_step
from jsdbound.synth.gaussian import SampleBatch
from jsdbound.utils.errors import DivergenceError, DomainError


@dataclass(frozen=True)
class StepEstimate:
    """Estimates produced by one training iteration.

    ``objective`` is the value of the loss or bound the network is trained on (L_CE for the cross-entropy trainer),
    ``mi_estimate`` the MI number the trainer reports. Estimators that share the network are in ``companions``.
    """

    estimator: Estimator
    objective: float
    mi_estimate: float
    companions: Dict[Estimator, float] = field(default_factory=dict)
    diverged: bool = False
    clamped: bool = False

    def rows(self) -> Dict[Estimator, Tuple[float, float]]:
        """(objective, mi_estimate) for the trainer and every companion estimator."""
        out = {self.estimator: (self.objective, self.mi_estimate)}
        for estimator, value in self.companions.items():
            objective = self.objective if estimator is Estimator.TWO_STEP else value
            out[estimator] = (objective, value)
        return out


def loss_and_param_grads(
    net: DiscriminatorNet, batch: SampleBatch, trainer: Estimator
) -> Tuple[float, Params, PairedScores]:
    """Training loss of ``trainer`` on ``batch`` and its exact gradient with respect to every parameter."""
    trainer = Estimator(trainer)
    if trainer not in LOSSES:
        raise DomainError(f'{trainer.value} is not a training objective')
    scores, cache = score_batch(batch, net)
    loss, score_grad = LOSSES[trainer](scores)
    grads = net.backward(cache.pairs, score_grad.ravel(), cache=cache)
    return loss, grads, scores


def estimate_from_scores(trainer: Estimator, loss: float, scores: PairedScores, smile_tau: float) -> StepEstimate:
    if trainer is Estimator.JSD_LB:
        report = jsd_lb_report(loss)
        if report.clamped:
            logger.debug(f'Cross-entropy {loss:.6f} above log 2, JSD lower bound clamped to 0')
        companions = {
            Estimator.TWO_STEP: two_step_estimate(scores),
            Estimator.SMILE: smile_estimate(scores, smile_tau),
        }
        return StepEstimate(
            estimator=trainer, objective=loss, mi_estimate=report.i_ce, companions=companions, clamped=report.clamped
        )
    value = -loss
    return StepEstimate(estimator=trainer, objective=value, mi_estimate=value)


def train_step(
    net: DiscriminatorNet,
    state: AdamState,
    batch: SampleBatch,
    objective: Estimator,
    smile_tau: float = SMILE_TAU,
    iteration: Optional[int] = None,
) -> Tuple[DiscriminatorNet, AdamState, StepEstimate]:
    """Evaluate the objective on ``batch``, backpropagate and apply one Adam update.

    The returned estimate is computed from the scores before the update.

    Raises:
        DivergenceError: if the loss, a gradient or an updated parameter is not finite
    """
    trainer = Estimator(objective)
    iteration = state.step if iteration is None else iteration
    loss, grads, scores = loss_and_param_grads(net, batch, trainer)
    if not math.isfinite(loss):
        raise DivergenceError(iteration, f'{trainer.value} loss is {loss}')
    if not all(np.all(np.isfinite(g)) for g in grads.values()):
        raise DivergenceError(iteration, f'{trainer.value} gradient is not finite')
    estimate = estimate_from_scores(trainer, loss, scores, smile_tau)
    net, state = adam_step(net, grads, state)
    if not net.is_finite():
        raise DivergenceError(iteration, 'parameters are not finite after the update')
    return net, state, estimate
