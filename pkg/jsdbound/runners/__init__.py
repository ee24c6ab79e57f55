from .staircase import RunResult, StaircaseRun
from .summary import WINDOW_FRACTION, summarize, window_means
