"""Plug-in fiducial inference for saturated logistic models with categorical predictors.

Each predictor cell's success probability gets its own fiducial draws; the
coefficients are logit contrasts against a reference cell::

    beta_0 = logit(theta_ref)
    beta_k = logit(theta_k) - logit(theta_ref)
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import FimaConfig, FimaDraws, fima_sample
from .inference import ConfidenceInterval, percentile_ci
from .mechanisms import DpRelease, NoiseFamily, PrivacyParams, ReleaseKind


class DesignKind(str, enum.Enum):
    ONE_BINARY = "one-binary"
    TWO_BINARY = "two-binary"
    SATURATED = "saturated"


def logit(p):
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)) or np.any(np.isnan(p)):
        raise ValueError("logit is defined on (0, 1) only")
    out = np.log(p) - np.log1p(-p)
    return float(out) if out.ndim == 0 else out


def inv_logit(x):
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                   np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LogisticDesign:
    """Cells of the predictor space and which cell each coefficient contrasts.

    ``contrasts`` maps a coefficient name to a cell index; ``beta0`` is always
    the logit of ``reference_cell``.
    """

    kind: DesignKind
    cell_labels: tuple
    reference_cell: int
    contrasts: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", DesignKind(self.kind))
        labels = tuple(self.cell_labels)
        object.__setattr__(self, "cell_labels", labels)
        if len(set(labels)) != len(labels):
            raise ValueError("cell labels must be distinct")
        if not 0 <= self.reference_cell < len(labels):
            raise ValueError(f"reference cell {self.reference_cell} is out of range")
        for name, idx in self.contrasts.items():
            if not 0 <= idx < len(labels) or idx == self.reference_cell:
                raise ValueError(f"coefficient {name} must contrast a non-reference cell")

    @property
    def n_cells(self) -> int:
        return len(self.cell_labels)

    @property
    def coefficients(self) -> list[str]:
        return ["beta0", *self.contrasts]

    @classmethod
    def one_binary_predictor(cls) -> "LogisticDesign":
        # logit(theta_T) = beta0 + beta1 * T, cells ordered T = 0, 1
        return cls(DesignKind.ONE_BINARY, (0, 1), 0, {"beta1": 1})

    @classmethod
    def two_binary_predictors(cls) -> "LogisticDesign":
        # logit(theta_T) = beta0 + beta1 * T1 + beta2 * T2 over cells (T1, T2)
        cells = ((0, 0), (1, 0), (0, 1), (1, 1))
        return cls(DesignKind.TWO_BINARY, cells, 0, {"beta1": 1, "beta2": 2})

    @classmethod
    def saturated(cls, K: int) -> "LogisticDesign":
        # last class is the reference
        if K < 2:
            raise ValueError("a saturated design needs at least two classes")
        return cls(DesignKind.SATURATED, tuple(range(1, K + 1)), K - 1,
                   {f"beta{k}": k - 1 for k in range(1, K)})

    def true_coefficients(self, thetas) -> dict[str, float]:
        thetas = np.asarray(thetas, dtype=float)
        ref = logit(thetas[self.reference_cell])
        out = {"beta0": ref}
        out.update({name: logit(thetas[idx]) - ref for name, idx in self.contrasts.items()})
        return out


@dataclass
class LogisticResult:
    intervals: dict[str, ConfidenceInterval]
    draws: dict[str, np.ndarray]

    def to_dict(self) -> dict:
        return {name: ci.to_dict() for name, ci in self.intervals.items()}


def beta_draws(cell_draws, design: LogisticDesign) -> dict[str, np.ndarray]:
    """Coefficient draws from per-cell fiducial draws (sequence indexed like the design)."""
    arrays = [np.asarray(d.draws if isinstance(d, FimaDraws) else d, dtype=float)
              for d in cell_draws]
    if len(arrays) != design.n_cells:
        raise ValueError(f"design has {design.n_cells} cells, got {len(arrays)} draw sets")
    if len({a.size for a in arrays}) != 1:
        raise ValueError("all cells need the same number of draws")
    logits = [logit(a) for a in arrays]
    ref = logits[design.reference_cell]
    out = {"beta0": ref}
    out.update({name: logits[idx] - ref for name, idx in design.contrasts.items()})
    return out


def logistic_inference(cell_counts_dp, n_per_cell, epsilon: float, design: LogisticDesign,
                       config: FimaConfig | None = None, rng: np.random.Generator | None = None,
                       level: float = 0.95,
                       family: NoiseFamily | str = NoiseFamily.LAPLACE) -> LogisticResult:
    """Two-sided percentile intervals for every coefficient.

    ``cell_counts_dp`` are privatized success counts, one per cell, each
    released with the full ``epsilon`` at sensitivity 1.
    """
    config = config or FimaConfig(H=10_000)
    rng = rng if rng is not None else np.random.default_rng()
    counts = np.asarray(cell_counts_dp, dtype=float)
    sizes = np.broadcast_to(np.asarray(n_per_cell, dtype=int), counts.shape)
    params = PrivacyParams.for_count(epsilon, family)
    cell_draws = []
    for x_hat, n in zip(counts, sizes):
        release = DpRelease([x_hat], int(n), params, ReleaseKind.COUNT)
        cell_draws.append(fima_sample(release, config, rng)[0])
    coef = beta_draws(cell_draws, design)
    intervals = {name: percentile_ci(d, level, bounds=(-np.inf, np.inf)) for name, d in coef.items()}
    return LogisticResult(intervals, coef)
