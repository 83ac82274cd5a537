import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fima.mechanisms import (DpRelease, NoiseFamily, PrivacyParams, ReleaseKind, privatize_counts,
                             privatize_proportions, sample_noise, sensitivity_proportion)


@pytest.mark.parametrize("n, expected", [(100, 0.01), (1, 1.0), (30, 1 / 30)])
def test_sensitivity_proportion(n, expected):
    assert sensitivity_proportion(n) == expected


def test_sensitivity_rejects_zero():
    with pytest.raises(ValueError):
        sensitivity_proportion(0)


@pytest.mark.parametrize("kwargs", [
    dict(epsilon=0.0, sensitivity=1.0),
    dict(epsilon=-1.0, sensitivity=1.0),
    dict(epsilon=math.inf, sensitivity=1.0),
    dict(epsilon=1.0, sensitivity=0.0),
])
def test_params_validation(kwargs):
    with pytest.raises(ValueError):
        PrivacyParams(**kwargs)


def test_tiny_scale_noise_vanishes(rng):
    params = PrivacyParams(epsilon=1e12, sensitivity=1.0)
    assert np.all(np.abs(sample_noise(params, rng, 10_000)) < 1e-9)


def test_laplace_variance(rng):
    # Laplace(0, b) has variance 2 b^2 = 2 at b = 1
    y = sample_noise(PrivacyParams(1.0, 1.0, NoiseFamily.LAPLACE), rng, 1_000_000)
    assert y.var() == pytest.approx(2.0, rel=0.05)
    assert abs(y.mean()) < 0.01


def test_gaussian_sd(rng):
    y = sample_noise(PrivacyParams(2.0, 1.0, NoiseFamily.GAUSSIAN), rng, 1_000_000)
    assert y.std() == pytest.approx(0.5, rel=0.02)


def test_discrete_laplace_pmf(rng):
    # exact pmf by enumeration: P(k) = (1 - r)/(1 + r) r^|k| with r = exp(-eps/Delta)
    eps = 0.7
    params = PrivacyParams.for_count(eps, NoiseFamily.DISCRETE_LAPLACE)
    y = sample_noise(params, rng, 400_000)
    assert np.all(y == np.round(y))
    r = math.exp(-eps)
    for k in range(-4, 5):
        exact = (1 - r) / (1 + r) * r ** abs(k)
        assert np.mean(y == k) == pytest.approx(exact, abs=4 * math.sqrt(exact / 400_000) + 1e-4)


def test_discrete_laplace_on_proportions_lives_on_lattice(rng):
    n = 40
    params = PrivacyParams.for_proportion(n, 1.0, "dlaplace")
    y = sample_noise(params, rng, 1000)
    assert np.allclose(y * n, np.round(y * n))
    # integer part matches the count-scale mechanism: variance 2r/(1-r)^2 on counts
    r = math.exp(-1.0)
    assert np.var(sample_noise(params, rng, 200_000) * n) == pytest.approx(2 * r / (1 - r) ** 2, rel=0.05)


def test_privatize_zero_noise_identity(rng):
    params = PrivacyParams(1e15, sensitivity_proportion(7))
    rel = privatize_proportions([0.5], 7, params, rng)
    assert rel.kind is ReleaseKind.PROPORTION
    assert rel.values[0] == pytest.approx(0.5, abs=1e-12)


def test_privatize_proportions_unbiased(rng):
    params = PrivacyParams.for_proportion(10, 1.0)
    reps = np.array([privatize_proportions([0.3, 0.7], 10, params, rng).values
                     for _ in range(100_000)])
    assert np.allclose(reps.mean(axis=0), [0.3, 0.7], atol=0.005)
    # independent components
    assert abs(np.corrcoef(reps.T)[0, 1]) < 0.01


def test_release_can_leave_unit_interval(rng):
    params = PrivacyParams.for_proportion(5, 0.1)
    values = np.array([privatize_proportions([1.0], 5, params, rng).values[0] for _ in range(200)])
    assert np.any(values > 1)


def test_privatize_proportions_rejects_bad_input(rng):
    params = PrivacyParams.for_proportion(10, 1.0)
    with pytest.raises(ValueError):
        privatize_proportions([1.2], 10, params, rng)
    with pytest.raises(ValueError):
        privatize_proportions([0.5], 20, params, rng)


def test_privatize_counts(rng):
    params = PrivacyParams.for_count(1e15)
    assert privatize_counts([42], params, rng).values[0] == pytest.approx(42)
    table = PrivacyParams.for_count(0.1, sensitivity=2.0)
    reps = np.array([privatize_counts([10, 20, 30, 40], table, rng).values for _ in range(100_000)])
    assert np.allclose(reps.mean(axis=0), [10, 20, 30, 40], atol=0.5)


def test_privatize_counts_keeps_negatives(rng):
    params = PrivacyParams.for_count(1.0)
    values = [privatize_counts([0], params, rng).values[0] for _ in range(100)]
    assert min(values) < 0


def test_privatize_counts_rejects_negative(rng):
    with pytest.raises(ValueError):
        privatize_counts([-1, 3], PrivacyParams.for_count(1.0), rng)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1),
       props=st.lists(st.floats(0, 1), min_size=1, max_size=5),
       n=st.integers(1, 500),
       eps=st.floats(0.01, 10),
       family=st.sampled_from(list(NoiseFamily)))
def test_release_deterministic_per_seed(seed, props, n, eps, family):
    params = PrivacyParams.for_proportion(n, eps, family)
    a = privatize_proportions(props, n, params, np.random.default_rng(seed))
    b = privatize_proportions(props, n, params, np.random.default_rng(seed))
    assert np.array_equal(a.values, b.values)
    assert a.values.shape == (len(props),)


def test_release_requires_values():
    with pytest.raises(ValueError):
        DpRelease([], 3, PrivacyParams.for_count(1.0), ReleaseKind.COUNT)
