from typing import Callable, Dict, Tuple

import numpy as np
import pytest

from jsdbound.nets import PARAM_NAMES, DiscriminatorNet
from jsdbound.synth import GaussianTaskSpec, SampleBatch, rho_for_mi, sample_joint

FD_STEP = 1e-5


def same_pattern(net: DiscriminatorNet, pairs: np.ndarray, reference) -> bool:
    return all(np.array_equal(a, b) for a, b in zip(net.activation_pattern(pairs), reference))


def finite_difference_grads(
    loss: Callable[[DiscriminatorNet], float], net: DiscriminatorNet, pairs: np.ndarray, h: float = FD_STEP
) -> Tuple[Dict[str, np.ndarray], Dict[str, np.ndarray]]:
    """Central differences of ``loss`` for every parameter entry.

    Entries whose perturbation moves a pre-activation across zero are masked out.
    """
    reference = net.activation_pattern(pairs)
    grads, masks = {}, {}
    for name in PARAM_NAMES:
        values = net.params[name]
        grads[name] = np.zeros_like(values)
        masks[name] = np.zeros(values.shape, dtype=bool)
        for idx in np.ndindex(values.shape):
            original = values[idx]
            values[idx] = original + h
            plus, plus_ok = loss(net), same_pattern(net, pairs, reference)
            values[idx] = original - h
            minus, minus_ok = loss(net), same_pattern(net, pairs, reference)
            values[idx] = original
            grads[name][idx] = (plus - minus) / (2 * h)
            masks[name][idx] = plus_ok and minus_ok
    return grads, masks


def max_relative_error(exact: Dict[str, np.ndarray], fd: Dict[str, np.ndarray], masks: Dict[str, np.ndarray]) -> float:
    worst = 0.0
    for name in PARAM_NAMES:
        a, f, m = exact[name][masks[name]], fd[name][masks[name]], masks[name].any()
        if not m:
            continue
        err = np.abs(a - f) / np.maximum(np.maximum(np.abs(a), np.abs(f)), 1e-5)
        worst = max(worst, float(err.max()))
    return worst


@pytest.fixture
def small_batch() -> Callable[[int, int, int], SampleBatch]:
    def make(d: int = 2, b: int = 6, seed: int = 0) -> SampleBatch:
        return sample_joint(GaussianTaskSpec(d, rho_for_mi(1.0, d)), b, np.random.default_rng(seed))

    return make
