"""A single staircase training run: one trainer, one seed, one network."""
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from loguru import logger

from jsdbound.estimators.objectives import SMILE_TAU, Estimator, trainer_of
from jsdbound.estimators.trainer import train_step
from jsdbound.nets.discriminator import HIDDEN, AdamState, DiscriminatorNet
from jsdbound.synth.gaussian import StaircaseSampler, StaircaseSchedule, Transform, spawn_streams
from jsdbound.utils.errors import DivergenceError, DomainError
from jsdbound.utils.records import append_trace, trace_path


@dataclass
class RunResult:
    trainer: Estimator
    seed: int
    wall_seconds: float
    diverged_at: Optional[int] = None

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None


class StaircaseRun:
    """Trains a fresh discriminator through every schedule step and appends the estimates of ``estimators``.

    Each estimator gets its own trace file in ``output``; rows are flushed at the end of every schedule step.
    """

    def __init__(
        self,
        trainer: Estimator,
        seed: int,
        d: int,
        schedule: StaircaseSchedule,
        batch_size: int,
        estimators: Sequence[Estimator],
        output: Path,
        transform: Transform = Transform.IDENTITY,
        smile_tau: float = SMILE_TAU,
        hidden: Sequence[int] = HIDDEN,
        initial_net: Optional[DiscriminatorNet] = None,
    ):
        self.trainer = Estimator(trainer)
        self.estimators = [Estimator(e) for e in estimators]
        if any(trainer_of(e) is not self.trainer for e in self.estimators):
            raise DomainError(f'Estimators {[e.value for e in self.estimators]} are not all trained by {trainer}')
        self.seed = seed
        self.schedule = schedule
        self.batch_size = batch_size
        self.smile_tau = smile_tau
        self.output = Path(output)
        data_rng, param_rng = spawn_streams(seed)
        self.sampler = StaircaseSampler(d, schedule, data_rng, transform)
        if initial_net is not None:
            if initial_net.d != d:
                raise DomainError(f'Loaded network expects d={initial_net.d}, the task has d={d}')
            self.net = initial_net.copy()
        else:
            self.net = DiscriminatorNet.init(d, param_rng, hidden)
        self.state = AdamState()
        self.iteration = 0

    @property
    def name(self) -> str:
        return f'{self.trainer.value}/seed{self.seed}'

    def _paths(self):
        return {e: trace_path(self.output, e, self.seed) for e in self.estimators}

    def run(self) -> RunResult:
        self.output.mkdir(parents=True, exist_ok=True)
        paths = self._paths()
        for path in paths.values():
            path.unlink(missing_ok=True)
        logger.info(f'Starting run {self.name} ({self.schedule.total_iterations} iterations)')
        start = time.perf_counter()
        diverged_at: Optional[int] = None
        first = 0
        for target, count in self.schedule.steps:
            rows: dict = {e: [] for e in self.estimators}
            for iteration in range(first, first + count):
                self.iteration = iteration
                if diverged_at is None:
                    try:
                        self._iterate(iteration, rows)
                    except DivergenceError as e:
                        logger.error(f'Run {self.name}: {e}')
                        diverged_at = e.iteration
                if diverged_at is not None:
                    for estimator in self.estimators:
                        rows[estimator].append(
                            (iteration, estimator.value, math.nan, math.nan, target, self.seed, 1)
                        )
            for estimator, path in paths.items():
                append_trace(rows[estimator], path)
            logger.debug(f'Run {self.name} finished the step at {target:g} nats')
            first += count
        self.iteration = self.schedule.total_iterations
        elapsed = time.perf_counter() - start
        if diverged_at is None:
            logger.success(f'Run {self.name} done in {elapsed:.1f}s')
        return RunResult(trainer=self.trainer, seed=self.seed, wall_seconds=elapsed, diverged_at=diverged_at)

    def _iterate(self, iteration: int, rows: dict) -> None:
        batch, target = self.sampler.sample(iteration, self.batch_size)
        self.net, self.state, estimate = train_step(
            self.net, self.state, batch, self.trainer, smile_tau=self.smile_tau, iteration=iteration
        )
        values = estimate.rows()
        reported = [values[e] for e in self.estimators]
        if not all(np.isfinite(v).all() for v in reported):
            raise DivergenceError(iteration, 'non-finite estimate')
        for estimator, (objective, mi_estimate) in zip(self.estimators, reported):
            rows[estimator].append((iteration, estimator.value, objective, mi_estimate, target, self.seed, 0))

    def save(self, directory: Path) -> Path:
        return self.net.save(Path(directory) / f'net_{self.trainer.value}_seed{self.seed}.npz')
