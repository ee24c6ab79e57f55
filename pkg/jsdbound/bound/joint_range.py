"""Bernoulli joint range map phi(mu, nu) = (JSD, KL), its Jacobian and the sign certification of its determinant."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger
from scipy.special import logit

from jsdbound.bound.xi import BoundValue, bernoulli_js, bernoulli_kl, xi, xi_from_gap, xi_inverse, xi_inverse_gap
from jsdbound.utils.errors import DomainError

CERTIFICATION_COLUMNS = ['mu', 'nu', 'det']


@dataclass(frozen=True)
class BernoulliPoint:
    """A parameter pair of the lower triangle, 0 <= nu <= mu <= 1.

    The edge nu = 0 is kept so that the infinite-KL edge of the range can be represented.
    """

    mu: float
    nu: float

    def __post_init__(self):
        if not (0.0 <= self.mu <= 1.0 and 0.0 <= self.nu <= 1.0):
            raise DomainError(f'({self.mu}, {self.nu}) is not in the unit square')
        if self.nu > self.mu:
            raise DomainError(f'({self.mu}, {self.nu}) is not in the lower triangle (nu <= mu)')

    @property
    def interior(self) -> bool:
        return 0.0 < self.nu < self.mu < 1.0


@dataclass(frozen=True)
class JacobianEval:
    djs_dmu: float
    djs_dnu: float
    dkl_dmu: float
    dkl_dnu: float
    det: float


@dataclass
class CertificationReport:
    """Outcome of evaluating the Jacobian determinant on a grid of interior points."""

    grid_per_axis: int
    margin: float
    checked: int
    max_det: float
    argmax: Tuple[float, float]
    failures: List[Tuple[float, float, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.checked > 0 and self.max_det < -self.margin

    def summary(self) -> str:
        status = 'PASS' if self.passed else 'FAIL'
        return (
            f'{status} grid={self.grid_per_axis} checked={self.checked} max_det={self.max_det:.6e} '
            + f'at mu={self.argmax[0]:.6f} nu={self.argmax[1]:.6f} margin={self.margin:g} failures={len(self.failures)}'
        )


def phi_array(mu, nu) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised phi on arrays of the unit square, without the lower-triangle restriction."""
    return np.asarray(bernoulli_js(mu, nu)), np.asarray(bernoulli_kl(mu, nu))


def phi(p: BernoulliPoint) -> BoundValue:
    """Image of a Bernoulli pair in the (JSD, KL) plane. The KL part is infinite on the nu = 0 edge when mu > 0."""
    return BoundValue(jsd=float(bernoulli_js(p.mu, p.nu)), kld=float(bernoulli_kl(p.mu, p.nu)))


def _jacobian_arrays(mu: np.ndarray, nu: np.ndarray) -> Tuple[np.ndarray, ...]:
    m = 0.5 * (mu + nu)
    logit_mu, logit_nu, logit_m = logit(mu), logit(nu), logit(m)
    djs_dmu = 0.5 * (logit_mu - logit_m)
    djs_dnu = 0.5 * (logit_nu - logit_m)
    dkl_dmu = logit_mu - logit_nu
    dkl_dnu = -(mu / nu - (1 - mu) / (1 - nu))
    det = djs_dmu * dkl_dnu - djs_dnu * dkl_dmu
    return djs_dmu, djs_dnu, dkl_dmu, dkl_dnu, det


def jacobian(p: BernoulliPoint) -> JacobianEval:
    """Closed-form Jacobian of phi at an interior point of the triangle.

    Raises:
        DomainError: if the point is on the boundary
    """
    if not p.interior:
        raise DomainError(f'Jacobian is only evaluated on the interior, got ({p.mu}, {p.nu})')
    values = _jacobian_arrays(np.float64(p.mu), np.float64(p.nu))
    return JacobianEval(*(float(v) for v in values))


def finite_difference_jacobian(p: BernoulliPoint, h: float = 1e-6) -> JacobianEval:
    """Central-difference Jacobian of phi, used as an oracle for the closed form."""
    js_mu_p, kl_mu_p = phi_array(p.mu + h, p.nu)
    js_mu_m, kl_mu_m = phi_array(p.mu - h, p.nu)
    js_nu_p, kl_nu_p = phi_array(p.mu, p.nu + h)
    js_nu_m, kl_nu_m = phi_array(p.mu, p.nu - h)
    djs_dmu = float(js_mu_p - js_mu_m) / (2 * h)
    djs_dnu = float(js_nu_p - js_nu_m) / (2 * h)
    dkl_dmu = float(kl_mu_p - kl_mu_m) / (2 * h)
    dkl_dnu = float(kl_nu_p - kl_nu_m) / (2 * h)
    return JacobianEval(djs_dmu, djs_dnu, dkl_dmu, dkl_dnu, djs_dmu * dkl_dnu - djs_dnu * dkl_dmu)


def _certify_rows(centers: np.ndarray, rows: range, margin: float) -> Tuple[int, float, Tuple[float, float], List]:
    checked = 0
    max_det = -np.inf
    argmax = (float('nan'), float('nan'))
    failures: List[Tuple[float, float, float]] = []
    for i in rows:
        if i == 0:
            continue
        mu = np.full(i, centers[i])
        nu = centers[:i]  # strictly below the diagonal, at least one grid step away from it
        det = _jacobian_arrays(mu, nu)[-1]
        checked += det.size
        j = int(np.argmax(det))
        if det[j] > max_det:
            max_det = float(det[j])
            argmax = (float(mu[j]), float(nu[j]))
        bad = np.flatnonzero(~(det < -margin))
        failures.extend((float(mu[k]), float(nu[k]), float(det[k])) for k in bad)
    return checked, max_det, argmax, failures


def certify_conjecture(grid_per_axis: int, margin: float = 0.0, workers: int = 1) -> CertificationReport:
    """Check that the Jacobian determinant of phi is negative on a grid of interior points.

    Grid coordinates are the cell centres (i + 1/2) / N, which keeps every point at least 1 / (2N) away from the
    boundary of the triangle. Rows are partitioned across workers and reduced in row order, so the report does not
    depend on the worker count.

    Args:
        grid_per_axis (int): number of cells per axis, at least 2
        margin (float, optional): the determinant must be below ``-margin``. Defaults to 0.
        workers (int, optional): number of threads evaluating row blocks. Defaults to 1.

    Raises:
        DomainError: if the grid is smaller than 2 or the margin is negative

    Returns:
        CertificationReport: counts, the largest determinant and every failing point
    """
    if grid_per_axis < 2:
        raise DomainError('grid_per_axis must be at least 2')
    if margin < 0:
        raise DomainError('margin must be non-negative')
    centers = (np.arange(grid_per_axis) + 0.5) / grid_per_axis
    workers = max(1, min(workers, grid_per_axis))
    bounds = np.linspace(0, grid_per_axis, workers + 1).astype(int)
    blocks = [range(bounds[k], bounds[k + 1]) for k in range(workers)]
    logger.info(f'Certifying determinant sign on a {grid_per_axis}x{grid_per_axis} grid with {workers} worker(s)')
    with ThreadPoolExecutor(max_workers=workers) as pool:
        partials = list(pool.map(lambda rows: _certify_rows(centers, rows, margin), blocks))
    report = CertificationReport(grid_per_axis=grid_per_axis, margin=margin, checked=0, max_det=-np.inf, argmax=(0, 0))
    for checked, max_det, argmax, failures in partials:
        report.checked += checked
        if max_det > report.max_det:
            report.max_det = max_det
            report.argmax = argmax
        report.failures.extend(failures)
    if report.passed:
        logger.success(report.summary())
    else:
        logger.error(report.summary())
    return report


def write_certification(report: CertificationReport, path: Union[str, Path]) -> Path:
    """Write failing points as ``mu,nu,det`` rows followed by a ``# summary`` line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(report.failures, columns=CERTIFICATION_COLUMNS)
    frame.to_csv(path, index=False, float_format='%.17g')
    with path.open('a') as f:
        f.write(f'# {report.summary()}\n')
    return path


def boundary_curve(n: int, y_min: float = 1e-4, y_max: float = 50.0) -> List[BoundValue]:
    """Sample the lower envelope of the range, the points (Xi^{-1}(y), y) for log-spaced y.

    Each point also carries its gap to log 2, which keeps the points distinct where ``jsd`` no longer does.

    Raises:
        DomainError: if fewer than two points are requested
    """
    if n < 2:
        raise DomainError('boundary_curve needs at least two points')
    ys = np.logspace(np.log10(y_min), np.log10(y_max), n)
    xs, gaps = xi_inverse(ys), xi_inverse_gap(ys)
    return [BoundValue(jsd=float(x), kld=float(y), gap=float(g)) for x, y, g in zip(xs, ys, gaps)]


def lies_above_envelope(values: List[BoundValue], tolerance: float = 1e-9) -> Optional[BoundValue]:
    """Return the first range point strictly below Xi at its JSD (beyond ``tolerance``), or None if there is none.

    Points with a positive ``gap`` are bounded through ``xi_from_gap``, the others through ``xi``.
    """
    jsd = np.array([v.jsd for v in values])
    kld = np.array([v.kld for v in values])
    gap = np.array([v.gap if v.gap is not None else np.nan for v in values], dtype=float)
    exact = gap > 0
    bound = np.empty_like(kld)
    bound[exact] = xi_from_gap(gap[exact])
    bound[~exact] = xi(jsd[~exact])
    below = np.flatnonzero(kld < bound - tolerance)
    return values[int(below[0])] if below.size else None
