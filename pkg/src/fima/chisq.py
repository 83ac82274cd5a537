"""Chi-squared test of independence on a privatized contingency table.

The null distribution of the statistic is simulated: fiducial draws of the two
marginal distributions give an independence model, a raw table is drawn from
it, privatized with fresh noise, and its statistic recorded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FimaConfig, draw_from_tilde
from .inference import TestResult
from .mechanisms import NoiseFamily, PrivacyParams, sample_noise

EXPECTED_FLOOR = 1e-8
TABLE_SENSITIVITY = 2.0


@dataclass(frozen=True)
class ContingencyTable:
    """K1 x K2 table of counts. ``n`` is the grand total of the raw table."""

    cells: np.ndarray
    n: int

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=float)
        if cells.ndim != 2 or min(cells.shape) < 1:
            raise ValueError(f"a contingency table must be 2-D, got shape {cells.shape}")
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_raw(cls, counts) -> "ContingencyTable":
        counts = np.asarray(counts)
        if np.any(counts < 0):
            raise ValueError("raw counts must be nonnegative")
        return cls(counts, int(round(float(counts.sum()))))

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape


@dataclass(frozen=True)
class ChisqResult:
    test: TestResult
    observed: float
    null_stats: np.ndarray

    def to_dict(self) -> dict:
        return {**self.test.to_dict(), "observed": self.observed,
                "H": int(self.null_stats.size)}


def marginal_counts(table: ContingencyTable) -> tuple[np.ndarray, np.ndarray]:
    return table.cells.sum(axis=1), table.cells.sum(axis=0)


def _chisq_stats(cells: np.ndarray) -> np.ndarray:
    # cells: (..., K1, K2); tables with nonpositive total map to +inf
    rows = cells.sum(axis=-1, keepdims=True)
    cols = cells.sum(axis=-2, keepdims=True)
    total = rows.sum(axis=-2, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        expected = np.maximum(rows * cols / total, EXPECTED_FLOOR)
        stat = ((cells - expected) ** 2 / expected).sum(axis=(-2, -1))
    return np.where(total[..., 0, 0] > 0, stat, np.inf)


def chi_square_statistic(table: ContingencyTable | np.ndarray) -> float:
    """Pearson statistic with expected counts floored at ``EXPECTED_FLOOR``."""
    cells = table.cells if isinstance(table, ContingencyTable) else np.asarray(table, dtype=float)
    if cells.sum() <= 0:
        raise ValueError("table total must be positive")
    return float(_chisq_stats(cells))


def fima_margin_draw(margin_hat, n: int, epsilon: float, K_other: int, config: FimaConfig,
                     rng: np.random.Generator, family: NoiseFamily | str = NoiseFamily.LAPLACE,
                     noise_sums=None) -> np.ndarray:
    """Fiducial draws of one margin's cell probabilities.

    Each margin entry sums ``K_other`` privatized cells, so the matched target is
    ``margin_hat/n`` minus the sum of ``K_other`` fresh noises at proportion
    scale ``2/(n*epsilon)``. Pass ``noise_sums`` (shape ``(..., K)``) to supply
    those sums directly, e.g. from a shared cell-noise matrix. Draws lie in
    (0, 1) but need not sum to one.
    """
    margin_hat = np.asarray(margin_hat, dtype=float)
    if noise_sums is None:
        params = PrivacyParams(epsilon, TABLE_SENSITIVITY / n, family, granularity=1.0 / n)
        noise_sums = sample_noise(params, rng, margin_hat.shape + (K_other,)).sum(axis=-1)
    tilde = margin_hat / n - np.asarray(noise_sums)
    return draw_from_tilde(tilde.ravel(), n, config, rng).reshape(tilde.shape)


def independence_probabilities(theta_rows: np.ndarray, theta_cols: np.ndarray) -> np.ndarray:
    """Outer product of margin draws, renormalized to sum to one (last two axes)."""
    outer = theta_rows[..., :, None] * theta_cols[..., None, :]
    return outer / outer.sum(axis=(-2, -1), keepdims=True)


def fima_chisq_null(table_dp: ContingencyTable, epsilon: float, config: FimaConfig,
                    rng: np.random.Generator,
                    family: NoiseFamily | str = NoiseFamily.LAPLACE) -> np.ndarray:
    """``H`` statistics simulated under independence, matched to ``table_dp``."""
    n = int(table_dp.n)
    if n < 1:
        raise ValueError("table total n must be positive")
    H = config.H
    K1, K2 = table_dp.shape
    rows_hat, cols_hat = marginal_counts(table_dp)

    cell_params = PrivacyParams(epsilon, TABLE_SENSITIVITY / n, family, granularity=1.0 / n)
    cell_noise = sample_noise(cell_params, rng, (H, K1, K2))
    theta_rows = fima_margin_draw(np.broadcast_to(rows_hat, (H, K1)), n, epsilon, K2,
                                  config, rng, family, noise_sums=cell_noise.sum(axis=2))
    theta_cols = fima_margin_draw(np.broadcast_to(cols_hat, (H, K2)), n, epsilon, K1,
                                  config, rng, family, noise_sums=cell_noise.sum(axis=1))

    probs = independence_probabilities(theta_rows, theta_cols).reshape(H, K1 * K2)
    raw = rng.multinomial(n, probs).reshape(H, K1, K2).astype(float)
    count_params = PrivacyParams.for_count(epsilon, family, TABLE_SENSITIVITY)
    noisy = raw + sample_noise(count_params, rng, raw.shape)
    return _chisq_stats(noisy)


def fima_chisq_test(table_dp: ContingencyTable, epsilon: float, config: FimaConfig | None = None,
                    rng: np.random.Generator | None = None, alpha: float = 0.05,
                    family: NoiseFamily | str = NoiseFamily.LAPLACE) -> ChisqResult:
    """Independence test on a table privatized at count scale ``2/epsilon``.

    The p-value is the share of simulated null statistics at or above the
    statistic of the privatized table itself.
    """
    config = config or FimaConfig(H=10_000)
    rng = rng if rng is not None else np.random.default_rng()
    observed = chi_square_statistic(table_dp)
    null = fima_chisq_null(table_dp, epsilon, config, rng, family)
    p = float(np.mean(null >= observed))
    return ChisqResult(TestResult(p, p < alpha, alpha, None, observed), observed, null)
