"""Classical non-private procedures used as benchmarks by the harness."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

from .inference import ConfidenceInterval, Direction, Sided, TestResult


def _check_count(x: int, n: int):
    if n < 1 or not 0 <= x <= n:
        raise ValueError(f"need 0 <= x <= n with n >= 1, got x={x}, n={n}")


def _z_pvalue(z: float, direction: Direction) -> float:
    return float(stats.norm.cdf(z) if direction is Direction.LESS else stats.norm.sf(z))


def _safe_z(diff: float, se: float) -> float:
    if se > 0:
        return diff / se
    # zero variance: the sign of the difference decides
    return 0.0 if diff == 0 else math.copysign(math.inf, diff)


def np_z_ci(x: int, n: int, level: float = 0.95,
            sided: Sided | str = Sided.TWO_SIDED) -> ConfidenceInterval:
    """Wald interval ``p +/- z * sqrt(p(1-p)/n)``; degenerate at ``p`` when x is 0 or n."""
    _check_count(x, n)
    sided = Sided(sided)
    p = x / n
    se = math.sqrt(p * (1 - p) / n)
    if sided is Sided.TWO_SIDED:
        z = stats.norm.ppf((1 + level) / 2)
        return ConfidenceInterval(p - z * se, p + z * se, level, sided)
    z = stats.norm.ppf(level)
    if sided is Sided.LOWER_ONLY:
        return ConfidenceInterval(p - z * se, 1.0, level, sided)
    return ConfidenceInterval(0.0, p + z * se, level, sided)


def np_z_test_one(x: int, n: int, gamma: float, direction: Direction | str = Direction.LESS,
                  alpha: float = 0.05) -> TestResult:
    _check_count(x, n)
    direction = Direction(direction)
    p = x / n
    z = _safe_z(p - gamma, math.sqrt(p * (1 - p) / n))
    pv = _z_pvalue(z, direction)
    return TestResult(pv, pv < alpha, alpha, direction, z)


def exact_binomial_ci(x: int, n: int, level: float = 0.95) -> ConfidenceInterval:
    """Clopper-Pearson interval from Beta quantiles."""
    _check_count(x, n)
    a = 1 - level
    lo = 0.0 if x == 0 else float(stats.beta.ppf(a / 2, x, n - x + 1))
    hi = 1.0 if x == n else float(stats.beta.ppf(1 - a / 2, x + 1, n - x))
    return ConfidenceInterval(lo, hi, level)


def exact_binomial_test(x: int, n: int, gamma: float,
                        direction: Direction | str = Direction.LESS,
                        alpha: float = 0.05) -> TestResult:
    _check_count(x, n)
    direction = Direction(direction)
    pv = stats.binomtest(x, n, gamma, alternative=direction.value).pvalue
    return TestResult(float(pv), pv < alpha, alpha, direction, x / n)


def np_two_sample_z(x1: int, n1: int, x2: int, n2: int,
                    direction: Direction | str = Direction.LESS,
                    alpha: float = 0.05) -> TestResult:
    """Pooled two-proportion z-test of ``theta1 - theta2`` against zero."""
    _check_count(x1, n1)
    _check_count(x2, n2)
    direction = Direction(direction)
    pooled = (x1 + x2) / (n1 + n2)
    se = math.sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n2))
    z = _safe_z(x1 / n1 - x2 / n2, se)
    pv = _z_pvalue(z, direction)
    return TestResult(pv, pv < alpha, alpha, direction, z)


def np_chisq_test(table, alpha: float = 0.05) -> TestResult:
    """Pearson independence test with the asymptotic chi-squared(df) p-value.

    Raises ``ValueError`` when an expected count is zero (an empty row or
    column), where the classical test is undefined.
    """
    cells = np.asarray(getattr(table, "cells", table), dtype=float)
    if cells.ndim != 2:
        raise ValueError("table must be 2-D")
    total = cells.sum()
    if total <= 0:
        raise ValueError("table total must be positive")
    expected = cells.sum(axis=1, keepdims=True) * cells.sum(axis=0, keepdims=True) / total
    if np.any(expected <= 0):
        raise ValueError("zero expected count: a row or column of the table is empty")
    stat = float(((cells - expected) ** 2 / expected).sum())
    df = (cells.shape[0] - 1) * (cells.shape[1] - 1)
    pv = float(stats.chi2.sf(stat, df))
    return TestResult(pv, pv < alpha, alpha, None, stat)
