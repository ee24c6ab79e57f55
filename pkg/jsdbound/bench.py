import functools
import logging
import sys
from pathlib import Path
from typing import Callable, List, Optional

import click
import numpy as np
from loguru import logger

from jsdbound import __version__
from jsdbound.bound import APPROX_SCALE, certify_conjecture, write_certification, xi, xi_approx, xi_inverse
from jsdbound.discrete import alpha_grid, tightness_sweep, write_tightness
from jsdbound.harness import StaircaseBench
from jsdbound.nets import DiscriminatorNet
from jsdbound.runners import summarize
from jsdbound.utils.config import RunConfig, read_config
from jsdbound.utils.errors import ConfigError, ConvergenceError, DomainError, EmptyWindowError, ShapeError
from jsdbound.utils.generic import InterceptHandler, format_nats, resolve_workers
from jsdbound.utils.records import read_traces, write_summary

EXIT_CONFIG = 3
EXIT_DOMAIN = 4
EXIT_CONVERGENCE = 5
EXIT_FAILED_CHECK = 6
TIGHTNESS_TOLERANCE = 1e-9


def setup_logging(level: str = 'INFO') -> None:
    logger.remove()
    logger.add(
        sys.stderr,
        format="<d>{time:YYYY-MM-DD HH:mm:ss}</> <lvl>{level: ^8}</>|<lvl><n>{message}</n></lvl>",
        level=level,
        backtrace=False,
        diagnose=False,
        colorize=True,
    )


setup_logging()
logging.getLogger("apscheduler.executors.default").setLevel("WARNING")
logging.basicConfig(handlers=[InterceptHandler()], level=0)


def exit_codes(func: Callable) -> Callable:
    """Turn library errors into a logged message and a distinct exit code."""

    @functools.wraps(func)
    def wrapper_exit_codes(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ConfigError as e:
            logger.error(f'Configuration error: {e}')
            sys.exit(EXIT_CONFIG)
        except (DomainError, ShapeError, EmptyWindowError) as e:
            logger.error(f'Invalid input: {e}')
            sys.exit(EXIT_DOMAIN)
        except ConvergenceError as e:
            logger.error(f'Solver failure: {e}')
            sys.exit(EXIT_CONVERGENCE)

    return wrapper_exit_codes


def parse_list(value: Optional[str], cast=str) -> Optional[List]:
    if value is None:
        return None
    try:
        return [cast(item.strip()) for item in value.split(',') if item.strip()]
    except ValueError as e:
        raise click.BadParameter(str(e))


@click.group()
@click.version_option(version=__version__, prog_name='jsdbound')
@click.option(
    '--log-level',
    type=click.Choice(['DEBUG', 'INFO', 'SUCCESS', 'WARNING', 'ERROR'], case_sensitive=False),
    default='INFO',
    show_default=True,
)
def main(log_level: str) -> None:
    """Optimal JSD to KL bound, its certification and MI estimator benchmarks."""
    setup_logging(log_level.upper())


@main.group(name='xi')
def xi_group() -> None:
    """Evaluate the bound function and its inverse."""


@xi_group.command(name='eval')
@click.argument('values', nargs=-1, type=float, required=True)
@exit_codes
def xi_eval(values) -> None:
    """Print Xi(x) for JSD values x in [0, log 2)."""
    for value in np.atleast_1d(xi(np.array(values))):
        click.echo(format_nats(float(value)))


@xi_group.command(name='inv')
@click.argument('values', nargs=-1, type=float, required=True)
@exit_codes
def xi_inv(values) -> None:
    """Print Xi^{-1}(y) for KL values y >= 0."""
    for value in np.atleast_1d(xi_inverse(np.array(values))):
        click.echo(format_nats(float(value)))


@xi_group.command(name='approx')
@click.argument('values', nargs=-1, type=float, required=True)
@click.option('--scale', type=float, default=APPROX_SCALE, show_default=True)
@exit_codes
def xi_approx_cmd(values, scale: float) -> None:
    """Print x, the exact Xi(x) and its logit approximation."""
    arr = np.array(values)
    for x, exact, approx in zip(arr, np.atleast_1d(xi(arr)), np.atleast_1d(xi_approx(arr, scale=scale))):
        click.echo(f'{format_nats(float(x))}\t{format_nats(float(exact))}\t{format_nats(float(approx))}')


@main.command()
@click.option('--grid', 'grid', type=int, default=1000, show_default=True, help='grid cells per axis')
@click.option('--margin', type=float, default=0.0, show_default=True, help='required distance of det J below zero')
@click.option('--workers', type=int, default=None, help='threads, defaults to $JSDBOUND_WORKERS or 1')
@click.option('--output', type=click.Path(dir_okay=False), default=None, help='CSV of failing points')
@exit_codes
def certify(grid: int, margin: float, workers: Optional[int], output: Optional[str]) -> None:
    """Check that the Jacobian determinant of the Bernoulli range map is negative on a grid."""
    report = certify_conjecture(grid, margin=margin, workers=resolve_workers(workers))
    if output:
        write_certification(report, output)
        logger.info(f'Certification written to {output}')
    click.echo(report.summary())
    if not report.passed:
        sys.exit(EXIT_FAILED_CHECK)


@main.command()
@click.option('--kmin', type=int, default=2, show_default=True)
@click.option('--kmax', type=int, default=500, show_default=True)
@click.option('--alpha-step', type=float, default=0.01, show_default=True)
@click.option('--output', type=click.Path(dir_okay=False), default=None, help='CSV of every (k, alpha) row')
@exit_codes
def tightness(kmin: int, kmax: int, alpha_step: float, output: Optional[str]) -> None:
    """Compare Xi(I_JS) with the exact MI over the alpha family of joint tables."""
    if kmin < 2 or kmax < kmin:
        raise DomainError('need 2 <= kmin <= kmax')
    rows = tightness_sweep(range(kmin, kmax + 1), alpha_grid(alpha_step))
    if output:
        write_tightness(rows, output)
        logger.info(f'Tightness sweep written to {output}')
    violation = max(row.bound - row.mi for row in rows)
    full = [abs(row.bound - row.mi) for row in rows if row.alpha == 1.0]
    gap_at_one = max(full) if full else float('nan')
    passed = violation <= TIGHTNESS_TOLERANCE and (not full or gap_at_one <= TIGHTNESS_TOLERANCE)
    click.echo(
        f'{"PASS" if passed else "FAIL"} rows={len(rows)} max(bound - mi)={violation:.3e} '
        + f'max|bound - mi| at alpha=1: {gap_at_one:.3e}'
    )
    if not passed:
        sys.exit(EXIT_FAILED_CHECK)


@main.command()
@click.option('--config', 'config_file', type=click.Path(dir_okay=False), default=None, help='YAML run config')
@click.option('--seeds', default=None, help='comma separated seeds')
@click.option('--estimators', default=None, help='comma separated estimators')
@click.option('--batch-size', type=int, default=None)
@click.option('--d', 'd', type=int, default=None)
@click.option('--transform', default=None)
@click.option('--smile-tau', type=float, default=None)
@click.option('--window-fraction', type=float, default=None)
@click.option('--output', default=None, help='results directory')
@click.option('--workers', type=int, default=None, help='threads, overrides $JSDBOUND_WORKERS and the config')
@click.option('--save-net', type=click.Path(file_okay=False), default=None, help='directory for trained networks')
@click.option('--load-net', type=click.Path(exists=True, dir_okay=False), default=None, help='initial network')
@exit_codes
def staircase(
    config_file: Optional[str],
    seeds: Optional[str],
    estimators: Optional[str],
    batch_size: Optional[int],
    d: Optional[int],
    transform: Optional[str],
    smile_tau: Optional[float],
    window_fraction: Optional[float],
    output: Optional[str],
    workers: Optional[int],
    save_net: Optional[str],
    load_net: Optional[str],
) -> None:
    """Train discriminators on the Gaussian staircase and summarise bias, variance and MSE."""
    config = read_config(config_file) if config_file else RunConfig()
    config = config.with_overrides(
        seeds=parse_list(seeds, int),
        estimators=parse_list(estimators),
        batch_size=batch_size,
        d=d,
        transform=transform,
        smile_tau=smile_tau,
        window_fraction=window_fraction,
        output=output,
    )
    config = config.with_overrides(workers=resolve_workers(workers, default=config.workers))
    initial_net = DiscriminatorNet.load(load_net) if load_net else None
    bench = StaircaseBench(config=config, initial_net=initial_net, save_dir=Path(save_net) if save_net else None)
    result = bench.start()
    click.echo(result.summary.to_csv(index=False, float_format='%.6g'), nl=False)


@main.command()
@click.option('--in', 'directory', type=click.Path(exists=True, file_okay=False), required=True)
@click.option('--window-fraction', type=float, default=0.2, show_default=True)
@exit_codes
def report(directory: str, window_fraction: float) -> None:
    """Recompute summary.csv from the trace files of a results directory."""
    traces = read_traces(directory)
    summary = summarize(traces, window_fraction)
    path = write_summary(summary, Path(directory) / 'summary.csv')
    logger.info(f'Summary written to {path}')
    click.echo(summary.to_csv(index=False, float_format='%.6g'), nl=False)


if __name__ == '__main__':
    main()
