"""Bias, variance and MSE of windowed staircase estimates across seeds."""
import math

import numpy as np
import pandas as pd
from loguru import logger

from jsdbound.utils.errors import DomainError, EmptyWindowError
from jsdbound.utils.generic import window_length
from jsdbound.utils.records import SUMMARY_COLUMNS, canonical_order

WINDOW_FRACTION = 0.2


def _check_fraction(window_fraction: float) -> None:
    if not 0 < window_fraction <= 1:
        raise DomainError('window_fraction must lie in (0, 1]')


def window_means(traces: pd.DataFrame, window_fraction: float = WINDOW_FRACTION) -> pd.DataFrame:
    """Per (estimator, target_mi, seed): the mean estimate over the last ``window_fraction`` of the step.

    A step in which the seed diverged is reported with ``diverged = True`` and an infinite mean.

    Raises:
        EmptyWindowError: if there are no traces
    """
    _check_fraction(window_fraction)
    if traces.empty:
        raise EmptyWindowError('No traces to summarise')
    records = []
    ordered = canonical_order(traces)
    for (estimator, target, seed), group in ordered.groupby(['estimator', 'true_mi', 'seed'], sort=False):
        group = group.sort_values('iteration')
        window = group.tail(window_length(len(group), window_fraction))
        if window.empty:
            raise EmptyWindowError(f'Empty window for {estimator} at {target} nats, seed {seed}')
        diverged = bool(group['diverged'].astype(bool).any()) or not np.isfinite(window['mi_estimate']).all()
        mean = math.inf if diverged else float(window['mi_estimate'].mean())
        records.append((estimator, float(target), int(seed), mean, float(window['mi_estimate'].std(ddof=0)), diverged))
    return pd.DataFrame(records, columns=['estimator', 'target_mi', 'seed', 'mean', 'spread', 'diverged'])


def summarize(traces: pd.DataFrame, window_fraction: float = WINDOW_FRACTION) -> pd.DataFrame:
    """Bias, variance (population, over seeds) and MSE = bias^2 + variance of each (estimator, target) cell.

    Cells with a diverged seed are infinite in every metric.
    """
    means = window_means(traces, window_fraction)
    rows = []
    for (estimator, target), cell in means.groupby(['estimator', 'target_mi'], sort=False):
        n_seeds = len(cell)
        if cell['diverged'].any():
            logger.warning(f'{estimator} at {target:g} nats has diverged seeds, reporting inf')
            rows.append((estimator, target, math.inf, math.inf, math.inf, n_seeds))
            continue
        estimates = cell['mean'].to_numpy()
        bias = float(estimates.mean() - target)
        variance = float(np.var(estimates))
        rows.append((estimator, target, bias, variance, bias**2 + variance, n_seeds))
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
