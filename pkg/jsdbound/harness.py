"""Staircase benchmark harness."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import pandas as pd
from apscheduler.schedulers.background import BackgroundScheduler
from apscheduler.triggers.interval import IntervalTrigger
from loguru import logger

from jsdbound.nets.discriminator import DiscriminatorNet
from jsdbound.runners.staircase import RunResult, StaircaseRun
from jsdbound.runners.summary import summarize
from jsdbound.utils.config import RunConfig, write_effective_config
from jsdbound.utils.records import TIMING_COLUMNS, read_traces, write_summary, write_timing


@dataclass
class BenchResult:
    traces: pd.DataFrame
    summary: pd.DataFrame
    timing: pd.DataFrame

    @property
    def diverged_runs(self) -> int:
        return int(self.timing['diverged_at'].notna().sum())


class StaircaseBench:
    """Runs every (trainer, seed) pair of a config in a thread pool and summarises the traces."""

    def __init__(
        self, config: RunConfig, initial_net: Optional[DiscriminatorNet] = None, save_dir: Optional[Path] = None
    ):
        self.config = config
        self.output = Path(config.output)
        self.save_dir = save_dir
        self.runs: List[StaircaseRun] = [
            StaircaseRun(
                trainer=trainer,
                seed=seed,
                d=config.d,
                schedule=config.staircase,
                batch_size=config.batch_size,
                estimators=estimators,
                output=self.output,
                transform=config.transform,
                smile_tau=config.smile_tau,
                initial_net=initial_net,
            )
            for trainer, estimators in config.trainers.items()
            for seed in config.seeds
        ]
        self.total_iterations = len(self.runs) * config.staircase.total_iterations
        self.progress_scheduler = BackgroundScheduler(
            job_defaults={
                'coalesce': True,
                'max_instances': 1,
                'misfire_grace_time': 20,
            }
        )

    def log_progress(self) -> None:
        done = sum(run.iteration for run in self.runs)
        logger.info(f'Progress: {done}/{self.total_iterations} iterations ({100 * done / self.total_iterations:.1f}%)')

    def start_progress_update(self) -> None:
        trigger = IntervalTrigger(seconds=self.config.progress_interval)
        self.progress_scheduler.add_job(self.log_progress, trigger=trigger)
        self.progress_scheduler.start()

    def start(self) -> BenchResult:
        self.output.mkdir(parents=True, exist_ok=True)
        write_effective_config(self.config, self.output)
        logger.info(
            f'Running {len(self.runs)} staircase runs (d={self.config.d}, b={self.config.batch_size}) '
            + f'with {self.config.workers} worker(s), results in {self.output}'
        )
        self.start_progress_update()
        try:
            with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
                results: List[RunResult] = list(pool.map(lambda run: run.run(), self.runs))
        finally:
            self.progress_scheduler.shutdown(wait=False)
        if self.save_dir is not None:
            for run in self.runs:
                run.save(self.save_dir)
        timing = pd.DataFrame(
            [(r.trainer.value, r.seed, r.wall_seconds, r.diverged_at) for r in results], columns=TIMING_COLUMNS
        ).astype({'diverged_at': 'Int64'})
        write_timing(timing, self.output / 'timing.csv')
        traces = read_traces(self.output)
        traces = traces[
            traces['estimator'].isin([e.value for e in self.config.estimators]) & traces['seed'].isin(self.config.seeds)
        ].reset_index(drop=True)
        summary = summarize(traces, self.config.window_fraction)
        write_summary(summary, self.output / 'summary.csv')
        result = BenchResult(traces=traces, summary=summary, timing=timing)
        if result.diverged_runs:
            logger.warning(f'{result.diverged_runs} run(s) diverged')
        logger.success(f'Staircase benchmark finished, summary written to {self.output / "summary.csv"}')
        return result
