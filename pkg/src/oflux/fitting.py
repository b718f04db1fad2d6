"""Least-squares power-law fits on log-log data."""
from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np


class LogLogFit(NamedTuple):
    slope: float
    intercept: float
    residual: float   # RMS of the log residuals


def loglog_fit(x: Sequence[float], y: Sequence[float]) -> LogLogFit:
    """Fit log y = slope * log x + intercept.  Non-positive y gives a NaN fit."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2 or np.any(y <= 0) or np.any(x <= 0):
        return LogLogFit(math.nan, math.nan, math.nan)
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    res = ly - (slope * lx + intercept)
    return LogLogFit(float(slope), float(intercept), float(np.sqrt(np.mean(res * res))))
