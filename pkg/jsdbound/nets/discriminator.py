"""Fully connected discriminator 2d -> 256 -> 256 -> 1 with manual backpropagation and Adam."""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from jsdbound.utils.errors import ShapeError

PARAM_NAMES = ('w1', 'b1', 'w2', 'b2', 'w3', 'b3')
HIDDEN = (256, 256)

Params = Dict[str, np.ndarray]


@dataclass
class ForwardCache:
    pairs: np.ndarray
    z1: np.ndarray
    h1: np.ndarray
    z2: np.ndarray
    h2: np.ndarray


class DiscriminatorNet:
    """Scores T(u, v) of concatenated pairs; sigmoid(T) is the posterior of the joint class."""

    def __init__(self, params: Params):
        missing = [name for name in PARAM_NAMES if name not in params]
        if missing:
            raise ShapeError(f'Missing parameters: {missing}')
        self.params = {name: np.asarray(params[name], dtype=float) for name in PARAM_NAMES}
        w1, w2, w3 = self.params['w1'], self.params['w2'], self.params['w3']
        if (
            w1.ndim != 2
            or w2.shape != (w1.shape[1], w2.shape[1])
            or w3.shape != (w2.shape[1], 1)
            or self.params['b1'].shape != (w1.shape[1],)
            or self.params['b2'].shape != (w2.shape[1],)
            or self.params['b3'].shape != (1,)
        ):
            raise ShapeError('Inconsistent parameter shapes')
        if w1.shape[0] % 2:
            raise ShapeError('Input dimension must be 2d')

    @classmethod
    def init(cls, d: int, rng: np.random.Generator, hidden: Sequence[int] = HIDDEN) -> 'DiscriminatorNet':
        """Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero."""
        if d < 1:
            raise ShapeError('d must be at least 1')
        widths = [2 * d, *hidden, 1]
        params: Params = {}
        for layer, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:]), start=1):
            limit = 1.0 / np.sqrt(fan_in)
            params[f'w{layer}'] = rng.uniform(-limit, limit, size=(fan_in, fan_out))
            params[f'b{layer}'] = np.zeros(fan_out)
        return cls(params)

    @classmethod
    def zeros(cls, d: int, hidden: Sequence[int] = HIDDEN) -> 'DiscriminatorNet':
        widths = [2 * d, *hidden, 1]
        params: Params = {}
        for layer, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:]), start=1):
            params[f'w{layer}'] = np.zeros((fan_in, fan_out))
            params[f'b{layer}'] = np.zeros(fan_out)
        return cls(params)

    @property
    def input_dim(self) -> int:
        return self.params['w1'].shape[0]

    @property
    def d(self) -> int:
        return self.input_dim // 2

    @property
    def hidden(self) -> Tuple[int, int]:
        return self.params['w1'].shape[1], self.params['w2'].shape[1]

    def _check_pairs(self, pairs: np.ndarray) -> np.ndarray:
        pairs = np.asarray(pairs, dtype=float)
        if pairs.ndim != 2 or pairs.shape[1] != self.input_dim:
            raise ShapeError(f'Expected pairs of shape (n, {self.input_dim}), got {pairs.shape}')
        return pairs

    def forward_cached(self, pairs: np.ndarray) -> Tuple[np.ndarray, ForwardCache]:
        pairs = self._check_pairs(pairs)
        p = self.params
        z1 = pairs @ p['w1'] + p['b1']
        h1 = np.maximum(z1, 0.0)
        z2 = h1 @ p['w2'] + p['b2']
        h2 = np.maximum(z2, 0.0)
        scores = (h2 @ p['w3'])[:, 0] + p['b3'][0]
        return scores, ForwardCache(pairs=pairs, z1=z1, h1=h1, z2=z2, h2=h2)

    def forward(self, pairs: np.ndarray) -> np.ndarray:
        return self.forward_cached(pairs)[0]

    def backward(self, pairs: np.ndarray, upstream: np.ndarray, cache: Optional[ForwardCache] = None) -> Params:
        """Exact gradients of sum_i upstream[i] * T(pairs[i]) with respect to every parameter."""
        if cache is None:
            _, cache = self.forward_cached(pairs)
        upstream = np.asarray(upstream, dtype=float)
        if upstream.shape != (cache.pairs.shape[0],):
            raise ShapeError(f'Expected {cache.pairs.shape[0]} upstream gradients, got shape {upstream.shape}')
        p = self.params
        g = upstream[:, None]
        grads: Params = {'w3': cache.h2.T @ g, 'b3': g.sum(axis=0)}
        dz2 = (g @ p['w3'].T) * (cache.z2 > 0)
        grads['w2'] = cache.h1.T @ dz2
        grads['b2'] = dz2.sum(axis=0)
        dz1 = (dz2 @ p['w2'].T) * (cache.z1 > 0)
        grads['w1'] = cache.pairs.T @ dz1
        grads['b1'] = dz1.sum(axis=0)
        return grads

    def activation_pattern(self, pairs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        _, cache = self.forward_cached(pairs)
        return cache.z1 > 0, cache.z2 > 0

    def parameters(self) -> np.ndarray:
        """All parameters flattened into one vector, in PARAM_NAMES order."""
        return np.concatenate([self.params[name].ravel() for name in PARAM_NAMES])

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(value)) for value in self.params.values())

    def copy(self) -> 'DiscriminatorNet':
        return DiscriminatorNet({name: value.copy() for name, value in self.params.items()})

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open('wb') as f:
            np.savez(f, **self.params)
        logger.info(f'Saved discriminator ({self.input_dim} -> {self.hidden} -> 1) to {path}')
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'DiscriminatorNet':
        with np.load(Path(path)) as data:
            params = {name: data[name] for name in PARAM_NAMES if name in data.files}
        return cls(params)


@dataclass
class AdamState:
    lr: float = 0.002
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)


def adam_step(net: DiscriminatorNet, grads: Params, state: AdamState) -> Tuple[DiscriminatorNet, AdamState]:
    """Bias-corrected Adam update applied in place to ``net`` and ``state``."""
    for name in PARAM_NAMES:
        if grads[name].shape != net.params[name].shape:
            raise ShapeError(f'Gradient {name} has shape {grads[name].shape}, expected {net.params[name].shape}')
    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step
    for name in PARAM_NAMES:
        g = grads[name]
        m = state.m.get(name, np.zeros_like(g))
        v = state.v.get(name, np.zeros_like(g))
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        state.m[name], state.v[name] = m, v
        net.params[name] -= state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)
    return net, state
