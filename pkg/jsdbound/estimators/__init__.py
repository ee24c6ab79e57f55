from .objectives import (
    LOSSES,
    POSTERIOR_EPSILON,
    SCORE_CLIP,
    SMILE_TAU,
    TRAINED_BY,
    Estimator,
    JsdReport,
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
    score_batch,
    smile_estimate,
    smile_value_and_grad,
    split_pairs,
    trainer_of,
    two_step_estimate,
    two_step_from_scores,
)
from .trainer import StepEstimate, estimate_from_scores, loss_and_param_grads, train_step
