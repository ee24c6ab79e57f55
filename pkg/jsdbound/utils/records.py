"""CSV records written and read by the benchmark."""
from pathlib import Path
from typing import Iterable, List, Union

import pandas as pd

from jsdbound.estimators.objectives import Estimator
from jsdbound.utils.errors import EmptyWindowError

TRACE_COLUMNS = ['iteration', 'estimator', 'objective', 'mi_estimate', 'true_mi', 'seed', 'diverged']
SUMMARY_COLUMNS = ['estimator', 'target_mi', 'bias', 'variance', 'mse', 'n_seeds']
TIMING_COLUMNS = ['trainer', 'seed', 'wall_seconds', 'diverged_at']
FLOAT_FORMAT = '%.17g'
ESTIMATOR_ORDER = [e.value for e in Estimator]


def trace_path(output: Union[str, Path], estimator: Estimator, seed: int) -> Path:
    return Path(output) / f'trace_{Estimator(estimator).value}_seed{seed}.csv'


def append_trace(rows: List[tuple], path: Path) -> None:
    """Append trace rows, writing the header when the file is new."""
    frame = pd.DataFrame(rows, columns=TRACE_COLUMNS)
    header = not path.exists()
    frame.to_csv(path, mode='a', header=header, index=False, float_format=FLOAT_FORMAT, na_rep='nan')


def canonical_order(traces: pd.DataFrame) -> pd.DataFrame:
    """Sort traces by (estimator, seed, iteration), estimators in their declaration order."""
    rank = traces['estimator'].map({name: i for i, name in enumerate(ESTIMATOR_ORDER)})
    return (
        traces.assign(_rank=rank)
        .sort_values(['_rank', 'seed', 'iteration'], kind='mergesort')
        .drop(columns='_rank')
        .reset_index(drop=True)
    )


def read_traces(directory: Union[str, Path]) -> pd.DataFrame:
    """Concatenate every ``trace_*.csv`` of a results directory in canonical order."""
    paths = sorted(Path(directory).glob('trace_*.csv'))
    if not paths:
        raise EmptyWindowError(f'No trace files in {Path(directory).resolve()}')
    frames = [pd.read_csv(path) for path in paths]
    return canonical_order(pd.concat(frames, ignore_index=True)[TRACE_COLUMNS])


def write_frame(frame: pd.DataFrame, path: Union[str, Path], columns: Iterable[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame[list(columns)].to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep='nan')
    return path


def write_summary(summary: pd.DataFrame, path: Union[str, Path]) -> Path:
    return write_frame(summary, path, SUMMARY_COLUMNS)


def write_timing(timing: pd.DataFrame, path: Union[str, Path]) -> Path:
    return write_frame(timing, path, TIMING_COLUMNS)
