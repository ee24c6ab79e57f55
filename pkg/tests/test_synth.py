import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from jsdbound.synth import (
    GaussianTaskSpec,
    SampleBatch,
    StaircaseSampler,
    StaircaseSchedule,
    Transform,
    apply_transform,
    default_staircase,
    rho_for_mi,
    sample_joint,
    spawn_streams,
)
from jsdbound.utils.errors import DomainError


def test_rho_for_mi_examples():
    assert rho_for_mi(0.0, 3) == 0
    assert rho_for_mi(2.0, 5) == pytest.approx(math.sqrt(1 - math.exp(-0.8)), abs=1e-15)
    assert rho_for_mi(2.0, 5) == pytest.approx(0.7420721, abs=1e-7)
    assert rho_for_mi(10.0, 5) == pytest.approx(math.sqrt(1 - math.exp(-4)), abs=1e-15)
    with pytest.raises(DomainError):
        rho_for_mi(-1.0, 5)


@pytest.mark.parametrize('target', [0.5, 2.0, 10.0])
def test_true_mi_inverts_rho(target):
    assert GaussianTaskSpec(5, rho_for_mi(target, 5)).true_mi == pytest.approx(target, rel=1e-12)


def test_spec_validation():
    with pytest.raises(DomainError):
        GaussianTaskSpec(0, 0.5)
    with pytest.raises(DomainError):
        GaussianTaskSpec(2, 1.0)
    with pytest.raises(ValueError):
        GaussianTaskSpec(2, 0.5, 'square')


def test_apply_transform_examples():
    for t in Transform:
        assert apply_transform(0.0, t) == 0
    assert apply_transform(2.0, Transform.CUBIC) == 8
    assert apply_transform(-4.0, Transform.HALFCUBE) == pytest.approx(-8.0)
    x = np.linspace(-3, 3, 101)
    for t in Transform:
        assert np.all(np.diff(apply_transform(x, t)) > 0)


def test_independent_samples_are_uncorrelated():
    batch = sample_joint(GaussianTaskSpec(10, 0.0), 100_000, np.random.default_rng(0))
    r = np.mean(batch.u * batch.v) / (batch.u.std() * batch.v.std())
    assert abs(r) < 3 / math.sqrt(batch.b * batch.d)


def test_marginals_are_standard_normal():
    b = 100_000
    batch = sample_joint(GaussianTaskSpec(5, rho_for_mi(4.0, 5)), b, np.random.default_rng(5))
    for sample in (batch.u, batch.v):
        assert np.all(np.abs(sample.mean(axis=0)) < 4 / math.sqrt(b))
        assert np.all(np.abs(sample.var(axis=0) - 1) < 10 / math.sqrt(b))


def test_sample_joint_is_reproducible():
    spec = GaussianTaskSpec(4, 0.7, Transform.ASINH)
    a = sample_joint(spec, 64, np.random.default_rng(11))
    b = sample_joint(spec, 64, np.random.default_rng(11))
    assert_array_equal(a.u, b.u)
    assert_array_equal(a.v, b.v)
    assert a.v.tobytes() == b.v.tobytes()


def test_correlation_matches_rho():
    batch = sample_joint(GaussianTaskSpec(1, 0.9), 1_000_000, np.random.default_rng(1))
    assert np.corrcoef(batch.u[:, 0], batch.v[:, 0])[0, 1] == pytest.approx(0.9, abs=0.003)


def test_cubic_is_identity_cubed_under_same_seed():
    plain = sample_joint(GaussianTaskSpec(3, 0.5), 100, np.random.default_rng(2))
    cubed = sample_joint(GaussianTaskSpec(3, 0.5, Transform.CUBIC), 100, np.random.default_rng(2))
    assert_array_equal(plain.u, cubed.u)
    assert_allclose(cubed.v, plain.v**3)


def test_sample_batch_shape_check():
    with pytest.raises(DomainError):
        SampleBatch(np.zeros((4, 2)), np.zeros((4, 3)))


def test_default_staircase():
    schedule = default_staircase(5)
    assert schedule.steps == [(2.0, 4000), (4.0, 4000), (6.0, 4000), (8.0, 4000), (10.0, 4000)]
    assert schedule.total_iterations == 20000
    assert StaircaseSampler(5, schedule, np.random.default_rng(0)).tasks[0].rho == pytest.approx(0.742073, abs=1e-6)


def test_schedule_validation_and_step_of():
    with pytest.raises(DomainError):
        StaircaseSchedule([(4.0, 10), (2.0, 10)])
    with pytest.raises(DomainError):
        StaircaseSchedule([(2.0, 0)])
    schedule = StaircaseSchedule([(1.0, 3), (2.0, 2)])
    assert [schedule.step_of(i) for i in range(5)] == [0, 0, 0, 1, 1]
    with pytest.raises(DomainError):
        schedule.step_of(5)


def test_sampler_follows_schedule():
    schedule = StaircaseSchedule([(1.0, 2), (3.0, 2)])
    sampler = StaircaseSampler(2, schedule, np.random.default_rng(0), Transform.ASINH)
    targets = [sampler.sample(i, 8)[1] for i in range(4)]
    assert targets == [1.0, 1.0, 3.0, 3.0]
    assert sampler.task_at(3).true_mi == pytest.approx(3.0)


def test_spawn_streams_are_reproducible_and_distinct():
    data_a, param_a = spawn_streams(7)
    data_b, param_b = spawn_streams(7)
    first = data_a.standard_normal(5)
    assert_array_equal(first, data_b.standard_normal(5))
    assert_array_equal(param_a.random(5), param_b.random(5))
    assert not np.array_equal(first, spawn_streams(7)[1].standard_normal(5))
