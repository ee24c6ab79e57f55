"""Closed-form and solver-based evaluation of the optimal JSD to KL lower bound function Xi."""
import math
import threading
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from cachetools import LRUCache, cached
from scipy.optimize import brentq
from scipy.special import logit, rel_entr

from jsdbound.utils.errors import ConvergenceError, DomainError

ArrayLike = Union[float, Sequence[float], np.ndarray]
BernoulliParam = float  # probability in [0, 1]

LOG2 = math.log(2)
JSD_SUP = float(np.nextafter(LOG2, 0.0))  # largest double below log 2
APPROX_SCALE = 1.15
XI_TOLERANCE = 1e-12  # absolute, on the KL root
MAX_ITERATIONS = 200
INITIAL_BRACKET = 100.0
BRACKET_CAP = 1e6


@dataclass(frozen=True)
class BoundValue:
    """A point of the (JSD, KL) joint range, both in nats.

    ``gap`` optionally carries log 2 - jsd at full relative precision, for points too close to log 2 for ``jsd`` to
    resolve.
    """

    jsd: float
    kld: float
    gap: Optional[float] = None


def _as_array(values: ArrayLike) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(values, dtype=float)
    return arr, arr.ndim == 0


def _output(arr: np.ndarray, scalar: bool):
    return float(arr) if scalar else arr


def _check_probability(name: str, arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise DomainError(f'{name} must be a probability in [0, 1]')


def _check_nonnegative(name: str, arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError(f'{name} must be finite and non-negative')


def _check_jsd(arr: np.ndarray, open_left: bool = False) -> None:
    if not np.all(np.isfinite(arr)) or np.any(arr >= LOG2):
        raise DomainError('JSD value must be finite and strictly below log 2')
    if np.any(arr <= 0) if open_left else np.any(arr < 0):
        interval = '(0, log 2)' if open_left else '[0, log 2)'
        raise DomainError(f'JSD value must lie in {interval}')


def bernoulli_kl(mu: ArrayLike, nu: ArrayLike):
    """KL divergence KL(B(mu) || B(nu)) between two Bernoulli distributions.

    Uses the convention 0 log 0 = 0. When ``nu`` is 0 or 1 and ``mu`` differs from it, the divergence is infinite and
    ``math.inf`` is returned.

    Args:
        mu (ArrayLike): parameter of the first Bernoulli distribution, in [0, 1]
        nu (ArrayLike): parameter of the second Bernoulli distribution, in [0, 1]

    Raises:
        DomainError: if a parameter is not a probability

    Returns:
        float or np.ndarray: the divergence in nats
    """
    mu_arr, mu_scalar = _as_array(mu)
    nu_arr, nu_scalar = _as_array(nu)
    _check_probability('mu', mu_arr)
    _check_probability('nu', nu_arr)
    out = rel_entr(mu_arr, nu_arr) + rel_entr(1 - mu_arr, 1 - nu_arr)
    return _output(out, mu_scalar and nu_scalar)


def bernoulli_js(mu: ArrayLike, nu: ArrayLike):
    """Jensen-Shannon divergence between B(mu) and B(nu), finite on the whole unit square.

    Args:
        mu (ArrayLike): parameter of the first Bernoulli distribution, in [0, 1]
        nu (ArrayLike): parameter of the second Bernoulli distribution, in [0, 1]

    Raises:
        DomainError: if a parameter is not a probability

    Returns:
        float or np.ndarray: the divergence in nats, in [0, log 2]
    """
    mu_arr, mu_scalar = _as_array(mu)
    nu_arr, nu_scalar = _as_array(nu)
    _check_probability('mu', mu_arr)
    _check_probability('nu', nu_arr)
    m = 0.5 * (mu_arr + nu_arr)
    out = 0.5 * (
        rel_entr(mu_arr, m) + rel_entr(1 - mu_arr, 1 - m) + rel_entr(nu_arr, m) + rel_entr(1 - nu_arr, 1 - m)
    )
    return _output(out, mu_scalar and nu_scalar)


def _gap_scalar(y: float) -> float:
    z = math.exp(-y)
    return 0.5 * ((1 + z) * math.log1p(z) + y * z)


def _log_gap_scalar(y: float) -> float:
    z = math.exp(-y)
    ratio = math.log1p(z) / z if z > 0 else 1.0
    return math.log(0.5) - y + math.log((1 + z) * ratio + y)


def _inverse_array(y: np.ndarray) -> np.ndarray:
    z = np.exp(-y)
    return np.minimum(LOG2 - 0.5 * ((1 + z) * np.log1p(z) + y * z), JSD_SUP)


def xi_inverse_gap(y: ArrayLike):
    """Distance of Xi^{-1}(y) to its supremum log 2, computed without cancellation.

    Args:
        y (ArrayLike): KL value in nats, non-negative and finite

    Raises:
        DomainError: if ``y`` is negative or not finite

    Returns:
        float or np.ndarray: ``log 2 - xi_inverse(y)``, decreasing from log 2 to 0
    """
    arr, scalar = _as_array(y)
    _check_nonnegative('y', arr)
    z = np.exp(-arr)
    return _output(0.5 * ((1 + z) * np.log1p(z) + arr * z), scalar)


def xi_inverse(y: ArrayLike):
    """Closed-form inverse of Xi, equal to JSD(B(1) || B(exp(-y))).

    Beyond y of about 37 the true value is closer to log 2 than double precision resolves; the result is then held at
    the largest double below log 2. Use ``xi_inverse_gap`` where those points must stay distinct.

    Args:
        y (ArrayLike): KL value in nats, non-negative and finite

    Raises:
        DomainError: if ``y`` is negative or not finite

    Returns:
        float or np.ndarray: the JSD value in [0, log 2)
    """
    arr, scalar = _as_array(y)
    _check_nonnegative('y', arr)
    return _output(_inverse_array(arr), scalar)


def xi_inverse_derivative(y: ArrayLike):
    """Derivative of Xi^{-1}, equal to exp(-y) log(1 + exp(y)) / 2.

    Args:
        y (ArrayLike): KL value in nats, non-negative and finite

    Raises:
        DomainError: if ``y`` is negative or not finite

    Returns:
        float or np.ndarray: the slope, strictly positive, at most log(2) / 2
    """
    arr, scalar = _as_array(y)
    _check_nonnegative('y', arr)
    return _output(0.5 * np.exp(-arr) * np.logaddexp(0.0, arr), scalar)


def _expand_bracket(func, hi: float) -> float:
    while func(hi) < 0:
        hi *= 2
        if hi > BRACKET_CAP:
            raise ConvergenceError(f'Could not bracket the root below {BRACKET_CAP:g}')
    return hi


@cached(cache=LRUCache(maxsize=65536), lock=threading.Lock())
def _xi_scalar(x: float) -> float:
    if x == 0.0:
        return 0.0

    def residual(y: float) -> float:
        return LOG2 - _gap_scalar(y) - x

    hi = _expand_bracket(residual, INITIAL_BRACKET)
    root, result = brentq(residual, 0.0, hi, xtol=XI_TOLERANCE, maxiter=MAX_ITERATIONS, full_output=True, disp=False)
    if not result.converged:
        raise ConvergenceError(f'Xi solver did not converge for x={x!r}: {result.flag}')
    return float(root)


def _xi_array(x: np.ndarray) -> np.ndarray:
    lo = np.zeros_like(x)
    hi = np.where(x == 0, 0.0, INITIAL_BRACKET)
    short = _inverse_array(hi) < x
    while np.any(short):
        hi[short] *= 2
        if np.any(hi > BRACKET_CAP):
            raise ConvergenceError(f'Could not bracket the root below {BRACKET_CAP:g}')
        short = _inverse_array(hi) < x
    for _ in range(MAX_ITERATIONS):
        mid = 0.5 * (lo + hi)
        resolved = (hi - lo <= 1e-15 * np.maximum(1.0, hi)) | (mid == lo) | (mid == hi)
        if np.all(resolved):
            break
        below = _inverse_array(mid) < x
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    else:
        raise ConvergenceError('Vectorised Xi solver did not reach the requested resolution')
    return 0.5 * (lo + hi)


def xi(x: ArrayLike):
    """Evaluate Xi, the optimal lower bound of KL as a function of JSD, as the inverse of its closed-form inverse.

    Scalars are solved with Brent's method on [0, 100], doubling the upper end (up to 1e6) while the root is not
    bracketed, and are memoised. Arrays are solved together by bracketed bisection down to machine resolution.

    Args:
        x (ArrayLike): JSD value in nats, in [0, log 2)

    Raises:
        DomainError: if ``x`` is outside [0, log 2)
        ConvergenceError: if the bracket cannot be expanded or the solver fails

    Returns:
        float or np.ndarray: the KL lower bound in nats
    """
    arr, scalar = _as_array(x)
    _check_jsd(arr)
    if scalar:
        return _xi_scalar(float(arr))
    return _xi_array(arr)


def xi_from_gap(g: ArrayLike):
    """Invert ``xi_inverse_gap``: find y such that log 2 - Xi^{-1}(y) = g.

    The equation is solved in log space, which keeps full relative precision where Xi^{-1}(y) is too close to log 2
    for double precision to separate them.

    Args:
        g (ArrayLike): gap in (0, log 2]

    Raises:
        DomainError: if ``g`` is outside (0, log 2]
        ConvergenceError: if the solver fails

    Returns:
        float or np.ndarray: the KL value y in nats
    """
    arr, scalar = _as_array(g)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0) or np.any(arr > LOG2):
        raise DomainError('gap must lie in (0, log 2]')
    out = np.array([_xi_from_gap_scalar(float(value)) for value in arr.ravel()]).reshape(arr.shape)
    return _output(out, scalar)


def _xi_from_gap_scalar(g: float) -> float:
    if g == LOG2:
        return 0.0
    log_g = math.log(g)

    def residual(y: float) -> float:
        return log_g - _log_gap_scalar(y)

    hi = _expand_bracket(residual, INITIAL_BRACKET)
    root, result = brentq(residual, 0.0, hi, xtol=XI_TOLERANCE, maxiter=MAX_ITERATIONS, full_output=True, disp=False)
    if not result.converged:
        raise ConvergenceError(f'Gap solver did not converge for g={g!r}: {result.flag}')
    return float(root)


def xi_derivative(x: ArrayLike):
    """Derivative of Xi through the inverse function theorem, 1 / (Xi^{-1})'(Xi(x)).

    Args:
        x (ArrayLike): JSD value in (0, log 2)

    Raises:
        DomainError: at the endpoints or outside the interval

    Returns:
        float or np.ndarray: the slope, strictly positive
    """
    arr, scalar = _as_array(x)
    _check_jsd(arr, open_left=True)
    y = xi(float(arr)) if scalar else xi(arr)
    return _output(1.0 / np.asarray(xi_inverse_derivative(y)), scalar)


def xi_approx(x: ArrayLike, scale: float = APPROX_SCALE):
    """Smooth logit approximation of Xi, ``scale * logit((x / log 2 + 1) / 2)``.

    Args:
        x (ArrayLike): JSD value in [0, log 2)
        scale (float, optional): logit scale. Defaults to 1.15.

    Raises:
        DomainError: if ``x`` is outside [0, log 2)

    Returns:
        float or np.ndarray: the approximate KL lower bound in nats
    """
    arr, scalar = _as_array(x)
    _check_jsd(arr)
    return _output(scale * logit(0.5 * (arr / LOG2 + 1)), scalar)


def approx_error_profile(xs: ArrayLike, scale: float = APPROX_SCALE) -> np.ndarray:
    """Relative error |xi_approx - xi| / xi on a grid of strictly positive JSD values."""
    arr = np.atleast_1d(np.asarray(xs, dtype=float))
    _check_jsd(arr, open_left=True)
    exact = _xi_array(arr)
    return np.abs(xi_approx(arr, scale=scale) - exact) / exact


def fit_approx_scale(xs: ArrayLike, scales: ArrayLike) -> Tuple[float, float]:
    """Grid search of the logit scale minimising the median relative error of the approximation.

    Returns:
        Tuple[float, float]: the best scale and its median relative error
    """
    candidates = np.atleast_1d(np.asarray(scales, dtype=float))
    medians = np.array([np.median(approx_error_profile(xs, scale=s)) for s in candidates])
    best = int(np.argmin(medians))
    return float(candidates[best]), float(medians[best])


def ce_gap_estimate(i_ce: float, delta: float) -> float:
    """First-order gap between the optimal bound Xi(I_JS) and the cross-entropy bound I_CE.

    With ``delta`` the expected KL between the true and the model posteriors, the gap is approximately
    ``delta * Xi'(x)`` at the JSD point x whose image is ``i_ce``.

    Args:
        i_ce (float): the cross-entropy bound in nats, non-negative
        delta (float): expected posterior KL in nats, non-negative

    Raises:
        DomainError: if an argument is negative or not finite

    Returns:
        float: the estimated gap in nats
    """
    if not math.isfinite(i_ce) or i_ce < 0:
        raise DomainError('i_ce must lie in the range of Xi, [0, inf)')
    if not math.isfinite(delta) or delta < 0:
        raise DomainError('delta must be finite and non-negative')
    if delta == 0:
        return 0.0
    return delta / float(xi_inverse_derivative(i_ce))
