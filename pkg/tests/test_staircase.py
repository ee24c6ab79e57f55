import math

import numpy as np
import pandas as pd
import pytest

from jsdbound.estimators import Estimator
from jsdbound.harness import StaircaseBench
from jsdbound.runners import StaircaseRun, summarize, window_means
from jsdbound.synth import StaircaseSchedule
from jsdbound.utils.config import RunConfig
from jsdbound.utils.errors import DivergenceError, DomainError
from jsdbound.utils.records import read_traces

TINY = [{'target': 1.0, 'iterations': 4}, {'target': 2.0, 'iterations': 4}]


def tiny_run(tmp_path, trainer=Estimator.JSD_LB, estimators=(Estimator.JSD_LB, Estimator.TWO_STEP), seed=0):
    return StaircaseRun(
        trainer=trainer,
        seed=seed,
        d=2,
        schedule=StaircaseSchedule([(1.0, 4), (2.0, 4)]),
        batch_size=4,
        estimators=estimators,
        output=tmp_path,
        hidden=(8, 8),
    )


def test_run_writes_one_trace_per_estimator(tmp_path):
    result = tiny_run(tmp_path).run()
    assert not result.diverged
    traces = read_traces(tmp_path)
    assert len(traces) == 16
    assert list(traces['estimator'].unique()) == ['jsd_lb', 'two_step']
    assert list(traces['true_mi'].iloc[:8]) == [1.0] * 4 + [2.0] * 4
    assert (traces['diverged'] == 0).all()


def test_run_is_reproducible(tmp_path):
    tiny_run(tmp_path / 'a', seed=4).run()
    tiny_run(tmp_path / 'b', seed=4).run()
    name = 'trace_jsd_lb_seed4.csv'
    assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()


def test_run_rejects_foreign_estimators(tmp_path):
    with pytest.raises(DomainError):
        tiny_run(tmp_path, trainer=Estimator.MINE, estimators=[Estimator.TWO_STEP])


def test_divergence_is_recorded_and_run_continues(tmp_path, monkeypatch):
    from jsdbound.runners import staircase

    real_step = staircase.train_step

    def failing_step(net, state, batch, objective, smile_tau, iteration):
        if iteration == 5:
            raise DivergenceError(iteration, 'injected')
        return real_step(net, state, batch, objective, smile_tau=smile_tau, iteration=iteration)

    monkeypatch.setattr(staircase, 'train_step', failing_step)
    result = tiny_run(tmp_path).run()
    assert result.diverged_at == 5
    traces = read_traces(tmp_path)
    jsd = traces[traces['estimator'] == 'jsd_lb']
    assert list(jsd['diverged']) == [0] * 5 + [1] * 3
    assert jsd['mi_estimate'].iloc[5:].isna().all()
    summary = summarize(traces).set_index(['estimator', 'target_mi'])
    assert math.isfinite(summary.loc[('jsd_lb', 1.0), 'bias'])
    assert summary.loc[('jsd_lb', 2.0), 'mse'] == math.inf


def test_bench_is_independent_of_worker_count(tmp_path):
    def bench(name, workers):
        config = RunConfig(
            d=2,
            batch_size=4,
            seeds=[0, 1],
            estimators=['jsd_lb', 'two_step', 'cpc'],
            schedule=TINY,
            output=str(tmp_path / name),
            workers=workers,
        )
        return StaircaseBench(config).start()

    single, pooled = bench('single', 1), bench('pooled', 3)
    pd.testing.assert_frame_equal(single.traces, pooled.traces)
    pd.testing.assert_frame_equal(single.summary, pooled.summary)
    assert len(single.timing) == 4
    assert (tmp_path / 'pooled' / 'summary.csv').read_bytes() == (tmp_path / 'single' / 'summary.csv').read_bytes()


def test_cpc_trace_is_capped(tmp_path):
    config = RunConfig(
        d=2, batch_size=8, seeds=[0], estimators=['cpc'], schedule=[{'target': 6.0, 'iterations': 60}],
        output=str(tmp_path),
    )
    traces = StaircaseBench(config).start().traces
    assert traces['mi_estimate'].max() <= math.log(8) + 1e-6


@pytest.fixture(scope='module')
def gaussian_staircase(tmp_path_factory):
    config = RunConfig(
        d=5,
        batch_size=64,
        seeds=list(range(10)),
        estimators=['jsd_lb', 'two_step'],
        output=str(tmp_path_factory.mktemp('staircase')),
        workers=4,
    )
    return StaircaseBench(config).start()


def cell(summary: pd.DataFrame, estimator: str, target: float) -> pd.Series:
    return summary.set_index(['estimator', 'target_mi']).loc[(estimator, target)]


@pytest.mark.slow
def test_two_step_bias_and_variance(gaussian_staircase):
    summary = gaussian_staircase.summary
    low, high = cell(summary, 'two_step', 2.0), cell(summary, 'two_step', 10.0)
    assert abs(low['bias']) <= 0.3 and low['variance'] <= 0.25
    assert abs(high['bias']) <= 0.5 and high['variance'] <= 2.0


@pytest.mark.slow
def test_staircase_shape(gaussian_staircase):
    means = window_means(gaussian_staircase.traces)
    steps = means[means['estimator'] == 'two_step'].groupby('target_mi')['mean'].mean()
    assert np.all(np.diff(steps.to_numpy()) > 0)
    for target, value in steps.items():
        if target <= 6:
            assert abs(value - target) <= 0.6


@pytest.mark.slow
def test_cross_entropy_bound_chain(gaussian_staircase):
    means = window_means(gaussian_staircase.traces)
    for target, group in means.groupby('target_mi'):
        i_ce = group[group['estimator'] == 'jsd_lb']['mean'].to_numpy()
        two_step = group[group['estimator'] == 'two_step']['mean'].to_numpy()
        stderr = max(i_ce.std(ddof=1), two_step.std(ddof=1)) / math.sqrt(len(i_ce))
        assert i_ce.mean() <= target + 2 * stderr
        assert i_ce.mean() <= two_step.mean() + 2 * stderr
