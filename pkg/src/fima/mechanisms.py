"""Additive differential-privacy mechanisms for proportions and counts.

A release has the form ``statistic + (sensitivity / epsilon) * Z`` where ``Z`` is
data-independent noise. Nothing is clamped at release time: privatized
proportions may leave [0, 1] and privatized counts may go negative.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np


class NoiseFamily(str, enum.Enum):
    LAPLACE = "laplace"
    GAUSSIAN = "gaussian"
    DISCRETE_LAPLACE = "dlaplace"


class ReleaseKind(str, enum.Enum):
    PROPORTION = "proportion"
    COUNT = "count"


@dataclass(frozen=True)
class PrivacyParams:
    """Noise calibration for one additive release.

    ``granularity`` is the lattice step of the discrete Laplace family: 1 for
    counts, ``1/n`` for proportions. It is ignored by continuous families.
    """

    epsilon: float
    sensitivity: float
    family: NoiseFamily = NoiseFamily.LAPLACE
    granularity: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", NoiseFamily(self.family))
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive and finite, got {self.epsilon}")
        if not (self.sensitivity > 0 and math.isfinite(self.sensitivity)):
            raise ValueError(f"sensitivity must be positive and finite, got {self.sensitivity}")
        if not self.granularity > 0:
            raise ValueError(f"granularity must be positive, got {self.granularity}")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError("noise scale sensitivity/epsilon must be finite and positive")

    @property
    def scale(self) -> float:
        return self.sensitivity / self.epsilon

    @classmethod
    def for_proportion(cls, n: int, epsilon: float,
                       family: NoiseFamily | str = NoiseFamily.LAPLACE) -> "PrivacyParams":
        """Parameters for releasing a sample proportion computed on ``n`` records."""
        return cls(epsilon, sensitivity_proportion(n), NoiseFamily(family), granularity=1.0 / n)

    @classmethod
    def for_count(cls, epsilon: float, family: NoiseFamily | str = NoiseFamily.LAPLACE,
                  sensitivity: float = 1.0) -> "PrivacyParams":
        """Parameters for releasing counts (use ``sensitivity=2`` for a full table)."""
        return cls(epsilon, sensitivity, NoiseFamily(family), granularity=1.0)

    def with_epsilon(self, epsilon: float) -> "PrivacyParams":
        return replace(self, epsilon=epsilon)


@dataclass(frozen=True)
class DpRelease:
    values: np.ndarray
    n: int
    params: PrivacyParams
    kind: ReleaseKind

    def __post_init__(self):
        values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if values.ndim != 1 or values.size < 1:
            raise ValueError("a release holds a non-empty vector of values")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "kind", ReleaseKind(self.kind))
        if self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")

    @property
    def proportions(self) -> np.ndarray:
        """Released values on the proportion scale (counts are divided by n)."""
        if self.kind is ReleaseKind.COUNT:
            return self.values / self.n
        return self.values

    def to_dict(self) -> dict:
        return {
            "values": self.values.tolist(),
            "n": int(self.n),
            "kind": self.kind.value,
            "epsilon": self.params.epsilon,
            "sensitivity": self.params.sensitivity,
            "family": self.params.family.value,
        }


def sensitivity_proportion(n: int) -> float:
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    return 1.0 / n


def _discrete_laplace(rng: np.random.Generator, decay: float, size) -> np.ndarray:
    # difference of two iid geometrics has P(Z=z) proportional to exp(-decay*|z|)
    p = -math.expm1(-decay)
    return (rng.geometric(p, size) - rng.geometric(p, size)).astype(float)


def sample_noise(params: PrivacyParams, rng: np.random.Generator, size=None):
    """Draw additive noise ``Y = (sensitivity/epsilon) * Z``.

    Laplace uses Z ~ Laplace(0, 1) and Gaussian uses Z ~ N(0, 1). The discrete
    Laplace family returns ``granularity * K`` where the integer K has mass
    proportional to ``exp(-|k| * epsilon * granularity / sensitivity)``.
    """
    if params.family is NoiseFamily.LAPLACE:
        return rng.laplace(0.0, params.scale, size)
    if params.family is NoiseFamily.GAUSSIAN:
        return rng.normal(0.0, params.scale, size)
    decay = params.granularity / params.scale
    draws = _discrete_laplace(rng, decay, size) * params.granularity
    return draws if size is not None else float(draws)


def privatize_proportions(props, n: int, params: PrivacyParams,
                          rng: np.random.Generator) -> DpRelease:
    props = np.atleast_1d(np.asarray(props, dtype=float))
    if np.any((props < 0) | (props > 1)) or np.any(np.isnan(props)):
        raise ValueError("proportions must lie in [0, 1]")
    if not math.isclose(params.sensitivity, sensitivity_proportion(n), rel_tol=1e-9):
        raise ValueError(
            f"proportion release on n={n} needs sensitivity 1/n, got {params.sensitivity}")
    noisy = props + sample_noise(params, rng, props.shape)
    return DpRelease(noisy, n, params, ReleaseKind.PROPORTION)


def privatize_counts(counts, params: PrivacyParams, rng: np.random.Generator,
                     n: int | None = None) -> DpRelease:
    """Add count-scale noise to each entry of ``counts``.

    ``n`` defaults to the sum of the counts; pass it explicitly when the
    counts are successes out of a larger sample.
    """
    counts = np.asarray(counts, dtype=float)
    if np.any(counts < 0) or np.any(np.isnan(counts)):
        raise ValueError("counts must be nonnegative")
    flat = np.atleast_1d(counts).ravel()
    if n is None:
        n = int(round(flat.sum()))
    noisy = flat + sample_noise(params, rng, flat.shape)
    return DpRelease(noisy, max(int(n), 1), params, ReleaseKind.COUNT)
