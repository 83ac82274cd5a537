"""Percentile intervals and tests read off fiducial draws."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import MACHINE_DELTA, FimaDraws


class Sided(str, enum.Enum):
    TWO_SIDED = "two-sided"
    LOWER_ONLY = "lower"
    UPPER_ONLY = "upper"


class Direction(str, enum.Enum):
    LESS = "less"
    GREATER = "greater"


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    level: float
    sided: Sided = Sided.TWO_SIDED

    def __post_init__(self):
        object.__setattr__(self, "sided", Sided(self.sided))
        if self.lower > self.upper:
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def __contains__(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sided"] = self.sided.value
        return d


@dataclass(frozen=True)
class TestResult:
    p_value: float
    reject: bool
    alpha: float
    direction: Direction | None = None
    statistic: float | None = None

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        d = asdict(self)
        d["direction"] = None if self.direction is None else Direction(self.direction).value
        return d


def _values(draws) -> np.ndarray:
    arr = draws.draws if isinstance(draws, FimaDraws) else draws
    arr = np.asarray(arr, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("need at least one draw")
    return arr


def _delta(draws) -> float:
    return draws.delta if isinstance(draws, FimaDraws) else MACHINE_DELTA


def _order_index(alpha: float, H: int) -> int:
    # round away float fuzz such as 0.1*30 == 3.0000000000000004 before the ceiling
    return min(max(math.ceil(round(alpha * H, 9)), 1), H)


def percentile_quantile(draws, alpha: float) -> float:
    """Smallest draw ``v`` whose empirical CDF reaches ``alpha`` (no interpolation)."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    x = np.sort(_values(draws))
    return float(x[_order_index(alpha, x.size) - 1])


def percentile_ci(draws, level: float = 0.95, sided: Sided | str = Sided.TWO_SIDED,
                  bounds: tuple[float, float] | None = None) -> ConfidenceInterval:
    """Percentile interval at ``level``.

    One-sided intervals are closed on the open side by ``bounds``, which
    defaults to the parameter space ``(delta, 1 - delta)``.
    """
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    sided = Sided(sided)
    if bounds is None:
        d = _delta(draws)
        bounds = (d, 1.0 - d)
    x = np.sort(_values(draws))

    def q(a):
        return float(x[_order_index(a, x.size) - 1])

    if sided is Sided.TWO_SIDED:
        lo, hi = q((1 - level) / 2), q((1 + level) / 2)
    elif sided is Sided.LOWER_ONLY:
        lo, hi = q(1 - level), bounds[1]
    else:
        lo, hi = bounds[0], q(level)
    return ConfidenceInterval(lo, max(lo, hi), level, sided)


def one_sample_test(draws, gamma: float, direction: Direction | str = Direction.LESS,
                    alpha: float = 0.05) -> TestResult:
    """Fraction of draws on the null side of ``gamma``.

    ``less`` tests H0: theta >= gamma against theta < gamma, so the p-value is
    the share of draws at or above gamma; ``greater`` mirrors it.
    """
    direction = Direction(direction)
    x = _values(draws)
    if direction is Direction.LESS:
        p = float(np.mean(x >= gamma))
    else:
        p = float(np.mean(x <= gamma))
    return TestResult(p, p < alpha, alpha, direction, float(np.mean(x)))


def two_sample_diff_draws(draws1, draws2) -> np.ndarray:
    x1, x2 = _values(draws1), _values(draws2)
    if x1.size != x2.size:
        raise ValueError(f"draw counts differ: {x1.size} vs {x2.size}")
    return x1 - x2


def two_sample_test(draws1, draws2, direction: Direction | str = Direction.LESS,
                    alpha: float = 0.05) -> TestResult:
    """Test on ``theta1 - theta2`` against zero using index-paired draws."""
    return one_sample_test(two_sample_diff_draws(draws1, draws2), 0.0, direction, alpha)
