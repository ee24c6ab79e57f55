from pathlib import Path

import pytest
import yaml

from jsdbound.estimators import Estimator
from jsdbound.synth import Transform
from jsdbound.utils.config import RunConfig, read_config, write_effective_config
from jsdbound.utils.errors import ConfigError
from jsdbound.utils.generic import WORKERS_ENV, resolve_workers

EXAMPLE = Path(__file__).resolve().parent.parent / 'user_data' / 'config.example.yml'


def write_yaml(path: Path, data) -> Path:
    path.write_text(yaml.safe_dump(data))
    return path


def test_example_config_is_valid():
    config = read_config(EXAMPLE)
    assert config.d == 5
    assert config.batch_size == 64
    assert config.seeds == list(range(10))
    assert config.staircase.total_iterations == 20000
    assert set(config.trainers) == {Estimator.JSD_LB, Estimator.MINE, Estimator.NWJ, Estimator.CPC}
    assert config.trainers[Estimator.JSD_LB] == [Estimator.JSD_LB, Estimator.TWO_STEP, Estimator.SMILE]


def test_defaults():
    config = RunConfig()
    assert config.transform is Transform.IDENTITY
    assert config.window_fraction == 0.2
    assert [s['target'] for s in config.schedule] == [2.0, 4.0, 6.0, 8.0, 10.0]


def test_partial_file_keeps_defaults(tmp_path):
    config = read_config(write_yaml(tmp_path / 'c.yml', {'d': 2, 'estimators': ['cpc']}))
    assert config.d == 2
    assert config.batch_size == 64
    assert config.estimators == [Estimator.CPC]


def test_missing_file():
    with pytest.raises(ConfigError):
        read_config('does/not/exist.yml')


@pytest.mark.parametrize(
    'data',
    [
        {'batch_size': 1},
        {'estimators': ['mine', 'magic']},
        {'schedule': [{'target': 4, 'iterations': 10}, {'target': 2, 'iterations': 10}]},
        {'seeds': []},
        {'window_fraction': 0},
        {'transform': 'square'},
    ],
)
def test_invalid_files(tmp_path, data):
    with pytest.raises(ConfigError):
        read_config(write_yaml(tmp_path / 'bad.yml', data))


def test_overrides_skip_none():
    config = RunConfig().with_overrides(batch_size=8, seeds=None, estimators=['mine', 'mine'])
    assert config.batch_size == 8
    assert config.seeds == list(range(10))
    assert config.estimators == [Estimator.MINE]
    with pytest.raises(ConfigError):
        RunConfig().with_overrides(transform='square')


def test_effective_config_echo(tmp_path):
    config = RunConfig(d=3, estimators=['jsd_lb', 'cpc'], output=str(tmp_path))
    path = write_effective_config(config, tmp_path)
    echoed = read_config(path)
    assert echoed.to_dict() == config.to_dict()


def test_worker_priority(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    assert resolve_workers(None, default=3) == 3
    monkeypatch.setenv(WORKERS_ENV, '5')
    assert resolve_workers(None, default=3) == 5
    assert resolve_workers(2, default=3) == 2
    monkeypatch.setenv(WORKERS_ENV, 'many')
    assert resolve_workers(None, default=3) == 3
