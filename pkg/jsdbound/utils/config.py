"""Config utilities."""
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Union

import yamale
import yaml
from loguru import logger

from jsdbound.estimators.objectives import SMILE_TAU, Estimator, trainer_of
from jsdbound.runners.summary import WINDOW_FRACTION
from jsdbound.synth.gaussian import STEP_ITERATIONS, STEP_TARGETS, StaircaseSchedule, Transform
from jsdbound.utils.errors import ConfigError, DomainError

SCHEMA_PATH = Path(__file__).resolve().parent.parent / 'schema.yml'
ECHO_NAME = 'config.yml'


def _default_schedule() -> List[Dict[str, float]]:
    return [{'target': target, 'iterations': STEP_ITERATIONS} for target in STEP_TARGETS]


@dataclass
class RunConfig:
    """Class to hold a staircase benchmark configuration."""

    d: int = 5
    transform: Transform = Transform.IDENTITY
    batch_size: int = 64
    seeds: List[int] = field(default_factory=lambda: list(range(10)))
    estimators: List[Estimator] = field(default_factory=lambda: [Estimator.JSD_LB, Estimator.TWO_STEP])
    schedule: List[Dict[str, float]] = field(default_factory=_default_schedule)
    smile_tau: float = SMILE_TAU
    window_fraction: float = WINDOW_FRACTION
    output: str = 'user_data/results'
    workers: int = 1
    progress_interval: float = 30
    config_file: str = ''

    def __post_init__(self):
        try:
            self.transform = Transform(self.transform)
            self.estimators = list(dict.fromkeys(Estimator(e) for e in self.estimators))
        except ValueError as e:
            raise ConfigError(str(e)) from e
        self.seeds = [int(s) for s in self.seeds]
        self.schedule = [{'target': float(s['target']), 'iterations': int(s['iterations'])} for s in self.schedule]
        if self.d < 1:
            raise ConfigError('d must be at least 1')
        if self.batch_size < 2:
            raise ConfigError('batch_size must be at least 2')
        if not self.seeds:
            raise ConfigError('seeds must not be empty')
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError('seeds must be distinct')
        if not self.estimators:
            raise ConfigError('estimators must not be empty')
        if not 0 < self.window_fraction <= 1:
            raise ConfigError('window_fraction must lie in (0, 1]')
        if self.smile_tau < 0:
            raise ConfigError('smile_tau must be non-negative')
        if self.workers < 1:
            raise ConfigError('workers must be at least 1')
        if self.progress_interval <= 0:
            raise ConfigError('progress_interval must be positive')
        try:
            self.staircase
        except DomainError as e:
            raise ConfigError(f'Invalid schedule: {e}') from e

    @property
    def staircase(self) -> StaircaseSchedule:
        return StaircaseSchedule(steps=[(s['target'], s['iterations']) for s in self.schedule])

    @property
    def trainers(self) -> Dict[Estimator, List[Estimator]]:
        """Training objectives needed by the requested estimators, each with the estimators it reports."""
        groups: Dict[Estimator, List[Estimator]] = {}
        for estimator in self.estimators:
            groups.setdefault(trainer_of(estimator), []).append(estimator)
        return groups

    def with_overrides(self, **overrides: Any) -> 'RunConfig':
        """Copy of the config with every non-None override applied."""
        return replace(self, **{key: value for key, value in overrides.items() if value is not None})

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['transform'] = self.transform.value
        data['estimators'] = [e.value for e in self.estimators]
        data.pop('config_file')
        return data


def parse_config_file(path: Path) -> RunConfig:
    with path.open('r') as f:
        conf = yaml.safe_load(f) or {}
    conf['config_file'] = str(path)
    return RunConfig(**conf)


def read_config(config_file: Union[str, Path]) -> RunConfig:
    """Validate a YAML config against the schema and parse it.

    Raises:
        ConfigError: if the file is missing, does not validate or holds inconsistent values
    """
    config_file_path = Path(config_file)
    if not config_file_path.is_file():
        raise ConfigError(f'Config file does not exist at {config_file_path.resolve()}')
    schema = yamale.make_schema(SCHEMA_PATH)
    try:
        data = yamale.make_data(config_file_path)
        yamale.validate(schema, data)
    except (ValueError, yaml.YAMLError) as e:
        raise ConfigError(f'Config file validation failed: {e}') from e
    config = parse_config_file(config_file_path)
    logger.info(f'Loaded config from {config_file_path}')
    return config


def write_effective_config(config: RunConfig, directory: Union[str, Path]) -> Path:
    path = Path(directory) / ECHO_NAME
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w') as f:
        yaml.safe_dump(config.to_dict(), f, sort_keys=False)
    return path
