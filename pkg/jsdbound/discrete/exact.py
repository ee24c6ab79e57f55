"""Exact divergences and discriminator posteriors for categorical joint distributions."""
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import entr, logit, rel_entr

from jsdbound.bound.xi import LOG2, xi
from jsdbound.utils.errors import DomainError

NORMALISATION_TOLERANCE = 1e-12
TIGHTNESS_COLUMNS = ['k', 'alpha', 'mi', 'jsinfo', 'bound']


@dataclass(frozen=True)
class ProbVector:
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or np.any(probs < 0) or abs(probs.sum() - 1.0) > NORMALISATION_TOLERANCE:
            raise DomainError('ProbVector must be a non-negative vector summing to one')
        object.__setattr__(self, 'probs', probs)

    @property
    def k(self) -> int:
        return self.probs.size


@dataclass(frozen=True)
class JointTable:
    """A k x k joint distribution; its marginals are the row and column sums."""

    table: np.ndarray

    def __post_init__(self):
        table = np.asarray(self.table, dtype=float)
        if table.ndim != 2 or table.shape[0] != table.shape[1]:
            raise DomainError(f'JointTable must be square, got shape {table.shape}')
        if np.any(table < 0) or abs(table.sum() - 1.0) > NORMALISATION_TOLERANCE:
            raise DomainError('JointTable entries must be non-negative and sum to one')
        object.__setattr__(self, 'table', table)

    @property
    def k(self) -> int:
        return self.table.shape[0]

    @property
    def p_u(self) -> ProbVector:
        return ProbVector(self.table.sum(axis=1))

    @property
    def p_v(self) -> ProbVector:
        return ProbVector(self.table.sum(axis=0))

    @property
    def product(self) -> np.ndarray:
        return np.outer(self.table.sum(axis=1), self.table.sum(axis=0))

    @property
    def mixture(self) -> np.ndarray:
        return 0.5 * (self.table + self.product)


@dataclass(frozen=True)
class TightnessRow:
    k: int
    alpha: float
    mi: float
    jsinfo: float
    bound: float


def categorical_kl(p: np.ndarray, q: np.ndarray) -> float:
    """KL(p || q) for probability arrays of equal shape; infinite if p has mass where q has none."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DomainError(f'Shape mismatch {p.shape} vs {q.shape}')
    return float(rel_entr(p, q).sum())


def categorical_js(p: np.ndarray, q: np.ndarray) -> float:
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    m = 0.5 * (p + q)
    return 0.5 * categorical_kl(p, m) + 0.5 * categorical_kl(q, m)


def make_alpha_family(k: int, alpha: float) -> JointTable:
    """Uniform-marginal table interpolating between independence (alpha = 0) and U = V (alpha = 1)."""
    if k < 2:
        raise DomainError('k must be at least 2')
    if not 0.0 <= alpha <= 1.0:
        raise DomainError('alpha must lie in [0, 1]')
    p_u = np.full(k, 1.0 / k)
    return JointTable((1 - alpha) * np.outer(p_u, p_u) + alpha * np.diag(p_u))


def random_joint_table(k: int, rng: np.random.Generator) -> JointTable:
    """Random table from i.i.d. exponential cell weights."""
    weights = rng.exponential(size=(k, k))
    return JointTable(weights / weights.sum())


def exact_mi(j: JointTable) -> float:
    return categorical_kl(j.table, j.product)


def exact_jsinfo(j: JointTable) -> float:
    return categorical_js(j.table, j.product)


def exact_posterior(j: JointTable) -> np.ndarray:
    """Posterior p(z=1 | u, v) of the balanced joint-versus-product classification problem."""
    p, q = j.table, j.product
    denom = p + q
    with np.errstate(invalid='ignore', divide='ignore'):
        return np.where(denom > 0, p / np.where(denom > 0, denom, 1.0), 0.5)


def mi_from_posterior(j: JointTable) -> float:
    """MI as the joint expectation of the posterior logit. Cells with zero joint mass carry zero weight."""
    p = j.table
    support = p > 0
    return float(np.sum(p[support] * logit(exact_posterior(j)[support])))


def binary_entropy(t: np.ndarray) -> np.ndarray:
    return entr(t) + entr(1 - t)


def optimal_ce_and_identities(j: JointTable) -> Tuple[float, float, float]:
    """Cross-entropy of the optimal discriminator, H(Z | U, V) and I_JS = log 2 - H(Z | U, V).

    Returns:
        Tuple[float, float, float]: ``(l_ce_star, h_z_given_uv, i_js)`` in nats
    """
    h = float(np.sum(j.mixture * binary_entropy(exact_posterior(j))))
    return h, h, LOG2 - h


def ce_decomposition(j: JointTable, q_model: np.ndarray) -> Tuple[float, float, float]:
    """Cross-entropy of a model posterior and its split into H(Z | U, V) plus the posterior KL delta.

    Args:
        j (JointTable): the joint distribution
        q_model (np.ndarray): model probabilities q(z=1 | u, v) per cell, in [0, 1]

    Returns:
        Tuple[float, float, float]: ``(l_ce, delta, h_z_given_uv)`` with ``l_ce = h_z_given_uv + delta``
    """
    q_model = np.asarray(q_model, dtype=float)
    if q_model.shape != j.table.shape:
        raise DomainError(f'Model posterior shape {q_model.shape} does not match the table {j.table.shape}')
    if np.any(q_model < 0) or np.any(q_model > 1):
        raise DomainError('Model posterior must contain probabilities')
    m = j.mixture
    post = exact_posterior(j)
    delta = float(np.sum(m * (rel_entr(post, q_model) + rel_entr(1 - post, 1 - q_model))))
    h = float(np.sum(m * binary_entropy(post)))
    return h + delta, delta, h


def alpha_family_divergences(k: int, alpha: float) -> Tuple[float, float]:
    """Closed-form (MI, I_JS) of the alpha family from its two distinct cell values.

    The k diagonal cells hold ``(1 - alpha) / k**2 + alpha / k``, the k(k - 1) others ``(1 - alpha) / k**2``, and
    the product of marginals is ``1 / k**2`` everywhere.
    """
    if k < 2:
        raise DomainError('k must be at least 2')
    if not 0.0 <= alpha <= 1.0:
        raise DomainError('alpha must lie in [0, 1]')
    q = 1.0 / k**2
    diag = (1 - alpha) * q + alpha / k
    off = (1 - alpha) * q
    m_diag, m_off = 0.5 * (diag + q), 0.5 * (off + q)
    mi = k * rel_entr(diag, q) + k * (k - 1) * rel_entr(off, q)
    kl_joint = k * rel_entr(diag, m_diag) + k * (k - 1) * rel_entr(off, m_off)
    kl_product = k * rel_entr(q, m_diag) + k * (k - 1) * rel_entr(q, m_off)
    return float(mi), float(0.5 * kl_joint + 0.5 * kl_product)


def tightness_sweep(ks: Iterable[int], alphas: Iterable[float]) -> List[TightnessRow]:
    """Exact MI, I_JS and the bound Xi(I_JS) over the alpha family, rows ordered by k then alpha."""
    ks, alphas = list(ks), list(alphas)
    if not ks or not alphas:
        raise DomainError('tightness_sweep needs non-empty k and alpha lists')
    grid = [(k, a) for k in ks for a in alphas]
    values = np.array([alpha_family_divergences(k, a) for k, a in grid])
    jsinfo = values[:, 1]
    bounds = xi(jsinfo)
    return [
        TightnessRow(k=k, alpha=float(a), mi=float(mi), jsinfo=float(js), bound=float(b))
        for (k, a), mi, js, b in zip(grid, values[:, 0], jsinfo, bounds)
    ]


def alpha_grid(step: float) -> np.ndarray:
    """Multiples of ``step`` below 1, followed by 1 itself.

    A step that does not divide 1 keeps its spacing and only the last interval is shorter, e.g. 0.3 gives
    0, 0.3, 0.6, 0.9, 1.
    """
    if not 0 < step <= 1:
        raise DomainError('alpha step must lie in (0, 1]')
    count = int(math.ceil(1.0 / step - 1e-9))
    return np.append(np.round(np.arange(count) * step, 12), 1.0)


def write_tightness(rows: Sequence[TightnessRow], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([(r.k, r.alpha, r.mi, r.jsinfo, r.bound) for r in rows], columns=TIGHTNESS_COLUMNS)
    frame.to_csv(path, index=False, float_format='%.17g')
    return path
