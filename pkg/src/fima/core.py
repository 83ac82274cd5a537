"""Fiducial matching: turn a privatized proportion into fiducial draws of theta.

Each draw solves ``pi_hat = F_U(theta) + Y*`` for a fresh noise copy ``Y*`` and a
fresh empirical CDF ``F_U`` of ``n`` uniforms. Since ``F_U`` is a step function the
solution is an interval between consecutive order statistics, and a point is
picked inside it with a weight ``D`` on [0, 1]. With ``D ~ Beta(1/2, 1/2)`` the
draw has the closed form ``Beta(n*t + 1/2, n - n*t + 1/2)`` with ``t = pi_hat - Y*``,
which is the default path here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import betaincinv

from .mechanisms import DpRelease, NoiseFamily, PrivacyParams, ReleaseKind, sample_noise

MACHINE_DELTA = 2.0 ** -52


class Method(str, enum.Enum):
    BETA_SHORTCUT = "beta"
    ORDER_STATISTIC = "order"


class BetaSampler(str, enum.Enum):
    NUMPY = "numpy"
    INVERSE_CDF = "inverse_cdf"


def jeffreys_weight(rng: np.random.Generator, size) -> np.ndarray:
    return rng.beta(0.5, 0.5, size)


@dataclass(frozen=True)
class FimaConfig:
    """Sampler settings.

    ``beta_sampler`` only affects the shortcut: ``numpy`` is fast and its cost
    does not depend on n, ``inverse_cdf`` maps one uniform per draw through the
    Beta quantile function so that draws are monotone in ``pi_hat`` under
    common random numbers.
    """

    H: int = 1000
    delta: float = MACHINE_DELTA
    method: Method = Method.BETA_SHORTCUT
    d_distribution: Callable[[np.random.Generator, int], np.ndarray] = field(
        default=jeffreys_weight, compare=False)
    beta_sampler: BetaSampler = BetaSampler.NUMPY

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "beta_sampler", BetaSampler(self.beta_sampler))
        if int(self.H) != self.H or self.H < 1:
            raise ValueError(f"H must be a positive integer, got {self.H}")
        if not 0 < self.delta < 0.5:
            raise ValueError(f"delta must lie in (0, 0.5), got {self.delta}")


@dataclass(frozen=True)
class FimaDraws:
    draws: np.ndarray
    n: int
    params: PrivacyParams | None = None
    source: float | None = None
    delta: float = MACHINE_DELTA

    def __post_init__(self):
        object.__setattr__(self, "draws", np.asarray(self.draws, dtype=float))

    def __len__(self) -> int:
        return self.draws.shape[-1]

    @property
    def H(self) -> int:
        return len(self)

    def summary(self) -> dict:
        d = self.draws
        return {"H": int(d.size), "mean": float(d.mean()), "sd": float(d.std(ddof=1)) if d.size > 1 else 0.0,
                "median": float(np.median(d))}


def tilde_theta(pi_hat: float, params: PrivacyParams, n: int, rng: np.random.Generator,
                size=None):
    """``pi_hat - Y*`` with ``Y*`` a fresh copy of the release noise.

    ``params`` must be the proportion-scale parameters (scale ``1/(n*epsilon)``).
    ``n`` is accepted for symmetry with the count path and is not used.
    """
    return pi_hat - sample_noise(params, rng, size)


def tilde_theta_from_count(x_hat: float, params: PrivacyParams, n: int,
                           rng: np.random.Generator, size=None):
    """Count analogue: ``(x_hat - Y*) / n`` with ``Y*`` at count scale."""
    return (x_hat - sample_noise(params, rng, size)) / n


def interval_solution(tilde: float, n: int, u_sorted, delta: float = MACHINE_DELTA
                      ) -> tuple[float, float]:
    """Set of theta with ``F_U(theta) = floor(n*tilde)/n``, as ``[lo, hi)``.

    Degenerate solutions (``tilde <= 0`` or ``tilde >= 1``) are returned as
    ``(delta, delta)`` and ``(1-delta, 1-delta)``. Otherwise the interval runs
    between the order statistics ``U_[k]`` and ``U_[k+1]`` with
    ``k = floor(n*tilde)`` and ``U_[0] = delta``.
    """
    u = np.asarray(u_sorted, dtype=float)
    if u.shape != (n,):
        raise ValueError(f"expected {n} uniforms, got shape {u.shape}")
    if np.any(np.diff(u) < 0):
        raise ValueError("uniforms must be sorted ascending")
    if tilde <= 0:
        return delta, delta
    if tilde >= 1:
        return 1.0 - delta, 1.0 - delta
    k = min(math.floor(n * tilde), n - 1)
    lo = delta if k == 0 else u[k - 1]
    return float(lo), float(u[k])


def draw_beta_shortcut(tilde, n: int, delta: float, rng: np.random.Generator,
                       sampler: BetaSampler | str = BetaSampler.NUMPY):
    """Jeffreys-type draw ``Beta(n*t + 1/2, n - n*t + 1/2)`` clamped to [delta, 1-delta].

    ``t > 1`` maps to ``1 - delta`` and ``t < 0`` to ``delta``.
    """
    scalar = np.ndim(tilde) == 0
    t = np.atleast_1d(np.asarray(tilde, dtype=float))
    inside = (t >= 0) & (t <= 1)
    a = n * np.where(inside, t, 0.5) + 0.5
    b = n - n * np.where(inside, t, 0.5) + 0.5
    if BetaSampler(sampler) is BetaSampler.INVERSE_CDF:
        raw = betaincinv(a, b, rng.uniform(size=t.shape))
    else:
        raw = rng.beta(a, b)
    out = np.where(t > 1, 1.0 - delta, np.where(t < 0, delta, raw))
    out = np.clip(out, delta, 1.0 - delta)
    return float(out[0]) if scalar else out


def _order_statistic_draws(t: np.ndarray, n: int, delta: float, rng: np.random.Generator,
                           d_distribution, chunk: int = 1 << 20) -> np.ndarray:
    out = np.empty_like(t)
    out[t <= 0] = delta
    out[t >= 1] = 1.0 - delta
    idx = np.flatnonzero((t > 0) & (t < 1))
    step = max(1, chunk // max(n, 1))
    for start in range(0, idx.size, step):
        sel = idx[start:start + step]
        u = np.sort(rng.uniform(size=(sel.size, n)), axis=1)
        k = np.minimum(np.floor(n * t[sel]).astype(np.int64), n - 1)
        rows = np.arange(sel.size)
        lo = np.where(k == 0, delta, u[rows, np.maximum(k - 1, 0)])
        hi = u[rows, k]
        weight = np.asarray(d_distribution(rng, sel.size), dtype=float)
        out[sel] = lo + weight * (hi - lo)
    return np.clip(out, delta, 1.0 - delta)


def draw_from_tilde(tilde, n: int, config: FimaConfig, rng: np.random.Generator) -> np.ndarray:
    """Map matched targets ``t`` to fiducial draws using ``config.method``."""
    t = np.atleast_1d(np.asarray(tilde, dtype=float))
    if config.method is Method.BETA_SHORTCUT:
        return draw_beta_shortcut(t, n, config.delta, rng, config.beta_sampler)
    return _order_statistic_draws(t, n, config.delta, rng, config.d_distribution)


def fima_sample(release: DpRelease, config: FimaConfig, rng: np.random.Generator
                ) -> list[FimaDraws]:
    """Fiducial draws for every component of ``release``, processed independently.

    Proportion releases are matched with noise at their own scale; count
    releases are matched on the count scale and divided by ``n``.
    """
    out = []
    for value in release.values:
        if release.kind is ReleaseKind.COUNT:
            t = tilde_theta_from_count(value, release.params, release.n, rng, config.H)
        else:
            t = tilde_theta(value, release.params, release.n, rng, config.H)
        draws = draw_from_tilde(t, release.n, config, rng)
        out.append(FimaDraws(draws, release.n, release.params, float(value), config.delta))
    return out


def fima_sample_from_count(x_hat: float, n: int, params: PrivacyParams, config: FimaConfig,
                           rng: np.random.Generator) -> FimaDraws:
    if not math.isclose(params.sensitivity, 1.0):
        raise ValueError("single-count releases have sensitivity 1")
    release = DpRelease([x_hat], n, params, ReleaseKind.COUNT)
    return fima_sample(release, config, rng)[0]


def fima_proportion(pi_hat: float, n: int, epsilon: float, rng: np.random.Generator,
                    config: FimaConfig | None = None,
                    family: NoiseFamily | str = NoiseFamily.LAPLACE) -> FimaDraws:
    """Shortcut for a single privatized proportion released with budget ``epsilon``."""
    config = config or FimaConfig()
    params = PrivacyParams.for_proportion(n, epsilon, family)
    release = DpRelease([pi_hat], n, params, ReleaseKind.PROPORTION)
    return fima_sample(release, config, rng)[0]
