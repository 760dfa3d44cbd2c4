"""
Statistics helpers for campaign summaries.
"""
import math
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from core.exceptions import DomainError

# 3-sigma bands throughout
SIGMA_BAND = 3.0


def binomial_interval(successes: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval for a success fraction."""
    if trials < 1:
        raise DomainError("binomial interval needs at least one trial")
    ci = stats.binomtest(int(successes), int(trials)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def binomial_band(probability: float, trials: int, sigmas: float = SIGMA_BAND) -> Tuple[float, float]:
    """Band on an observed fraction around its expected value."""
    sigma = math.sqrt(probability * (1.0 - probability) / trials)
    return probability - sigmas * sigma, probability + sigmas * sigma


def within_band(observed: float, probability: float, trials: int, sigmas: float = SIGMA_BAND) -> bool:
    low, high = binomial_band(probability, trials, sigmas)
    # Degenerate probabilities have zero width; allow rounding noise only
    return low - 1e-12 <= observed <= high + 1e-12


def uniformity_pvalue(counts: Sequence[int], expected: Sequence[float]) -> float:
    """Chi-square goodness of fit of raw counts against expected counts."""
    observed = np.asarray(counts, dtype=float)
    expected_arr = np.asarray(expected, dtype=float)
    expected_arr = expected_arr * observed.sum() / expected_arr.sum()
    return float(stats.chisquare(observed, expected_arr).pvalue)


def summarize(values: Sequence[float]) -> Dict[str, Optional[float]]:
    """Median, interquartile range, maximum and mean; None entries for empty input."""
    arr = np.asarray([v for v in values if v is not None], dtype=float)
    if arr.size == 0:
        return {"median": None, "iqr": None, "max": None, "mean": None, "count": 0}
    q1, median, q3 = np.percentile(arr, [25, 50, 75])
    return {
        "median": float(median),
        "iqr": float(q3 - q1),
        "max": float(arr.max()),
        "mean": math.fsum(arr.tolist()) / arr.size,
        "count": int(arr.size),
    }
