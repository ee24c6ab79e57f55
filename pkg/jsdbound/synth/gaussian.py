"""Correlated Gaussian staircase tasks with known mutual information."""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Tuple

import numpy as np

from jsdbound.utils.errors import DomainError

STEP_ITERATIONS = 4000
STEP_TARGETS = (2.0, 4.0, 6.0, 8.0, 10.0)


class Transform(str, Enum):
    IDENTITY = 'identity'
    CUBIC = 'cubic'
    ASINH = 'asinh'
    HALFCUBE = 'halfcube'


@dataclass(frozen=True)
class GaussianTaskSpec:
    d: int
    rho: float
    transform: Transform = Transform.IDENTITY

    def __post_init__(self):
        if self.d < 1:
            raise DomainError('d must be at least 1')
        if not 0.0 <= self.rho < 1.0:
            raise DomainError('rho must lie in [0, 1)')
        object.__setattr__(self, 'transform', Transform(self.transform))

    @property
    def true_mi(self) -> float:
        return -0.5 * self.d * math.log1p(-self.rho**2)


@dataclass
class SampleBatch:
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if self.u.shape != self.v.shape or self.u.ndim != 2:
            raise DomainError(f'Paired samples must share a (b, d) shape, got {self.u.shape} and {self.v.shape}')

    @property
    def b(self) -> int:
        return self.u.shape[0]

    @property
    def d(self) -> int:
        return self.u.shape[1]


@dataclass
class StaircaseSchedule:
    steps: List[Tuple[float, int]] = field(default_factory=list)

    def __post_init__(self):
        if not self.steps:
            raise DomainError('A schedule needs at least one step')
        targets = [float(t) for t, _ in self.steps]
        if any(b <= a for a, b in zip(targets, targets[1:])):
            raise DomainError('Schedule targets must be strictly increasing')
        if any(int(n) <= 0 for _, n in self.steps):
            raise DomainError('Every schedule step needs a positive iteration count')
        if any(t < 0 for t in targets):
            raise DomainError('Schedule targets must be non-negative')
        self.steps = [(float(t), int(n)) for t, n in self.steps]

    @property
    def total_iterations(self) -> int:
        return sum(n for _, n in self.steps)

    def step_of(self, iteration: int) -> int:
        """Index of the schedule step that contains the zero-based ``iteration``."""
        if iteration < 0:
            raise DomainError('iteration must be non-negative')
        remaining = iteration
        for index, (_, n) in enumerate(self.steps):
            if remaining < n:
                return index
            remaining -= n
        raise DomainError(f'iteration {iteration} is past the end of the schedule')


def rho_for_mi(target_mi: float, d: int) -> float:
    """Correlation giving ``target_mi`` nats between d-dimensional correlated Gaussians."""
    if target_mi < 0 or not math.isfinite(target_mi):
        raise DomainError('target MI must be finite and non-negative')
    if d < 1:
        raise DomainError('d must be at least 1')
    return math.sqrt(-math.expm1(-2.0 * target_mi / d))


def apply_transform(x, transform: Transform):
    """Strictly increasing componentwise maps; they leave the mutual information unchanged."""
    transform = Transform(transform)
    x = np.asarray(x, dtype=float)
    if transform is Transform.IDENTITY:
        out = x.copy()
    elif transform is Transform.CUBIC:
        out = x**3
    elif transform is Transform.ASINH:
        out = np.arcsinh(x)
    else:
        out = np.sign(x) * np.abs(x) ** 1.5
    return float(out) if out.ndim == 0 else out


def spawn_streams(seed: int) -> Tuple[np.random.Generator, np.random.Generator]:
    """Independent (data, parameter) generators of one run, derived from a single seed."""
    data_seq, param_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.Generator(np.random.PCG64(data_seq)), np.random.Generator(np.random.PCG64(param_seq))


def sample_joint(spec: GaussianTaskSpec, b: int, rng: np.random.Generator) -> SampleBatch:
    """Draw ``b`` pairs: u standard normal, v = transform(rho u + sqrt(1 - rho^2) n)."""
    if b < 1:
        raise DomainError('batch size must be at least 1')
    u = rng.standard_normal((b, spec.d))
    n = rng.standard_normal((b, spec.d))
    v = spec.rho * u + math.sqrt(1.0 - spec.rho**2) * n
    return SampleBatch(u=u, v=apply_transform(v, spec.transform))


def default_staircase(d: int) -> StaircaseSchedule:
    if d < 1:
        raise DomainError('d must be at least 1')
    return StaircaseSchedule(steps=[(target, STEP_ITERATIONS) for target in STEP_TARGETS])


class StaircaseSampler:
    """Stateful sampler walking a schedule; one instance serves one run."""

    def __init__(self, d: int, schedule: StaircaseSchedule, rng: np.random.Generator, transform=Transform.IDENTITY):
        self.d = d
        self.schedule = schedule
        self.rng = rng
        self.transform = Transform(transform)
        self.tasks = [GaussianTaskSpec(d=d, rho=rho_for_mi(t, d), transform=self.transform) for t, _ in schedule.steps]

    def task_at(self, iteration: int) -> GaussianTaskSpec:
        return self.tasks[self.schedule.step_of(iteration)]

    def sample(self, iteration: int, b: int) -> Tuple[SampleBatch, float]:
        """Batch for ``iteration`` and the true MI of the step it belongs to."""
        step = self.schedule.step_of(iteration)
        return sample_joint(self.tasks[step], b, self.rng), self.schedule.steps[step][0]
