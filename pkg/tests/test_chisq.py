import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fima.chisq import (ContingencyTable, chi_square_statistic, fima_chisq_null, fima_chisq_test,
                        fima_margin_draw, independence_probabilities, marginal_counts)
from fima.core import FimaConfig
from fima.mechanisms import PrivacyParams, privatize_counts


def closed_form_2x2(a, b, c, d):
    n = a + b + c + d
    return n * (a * d - b * c) ** 2 / ((a + b) * (c + d) * (a + c) * (b + d))


def test_marginals():
    rows, cols = marginal_counts(ContingencyTable.from_raw([[10, 20], [30, 40]]))
    assert rows.tolist() == [30, 70] and cols.tolist() == [40, 60]


def test_marginals_zero_and_negative():
    rows, cols = marginal_counts(ContingencyTable(np.zeros((2, 3)), 1))
    assert not rows.any() and not cols.any()
    rows, _ = marginal_counts(ContingencyTable([[-5.0, 1.0], [2.0, 3.0]], 6))
    assert rows[0] == -4.0


def test_statistic_independent_table():
    assert chi_square_statistic(ContingencyTable.from_raw([[25, 25], [25, 25]])) == 0


def test_statistic_closed_form():
    expected = closed_form_2x2(10, 20, 30, 40)
    assert expected == pytest.approx(0.79365, abs=1e-5)
    assert chi_square_statistic(np.array([[10, 20], [30, 40]])) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(cells=st.lists(st.lists(st.integers(1, 500), min_size=3, max_size=3), min_size=2, max_size=4))
def test_statistic_transpose_invariant(cells):
    t = np.array(cells, dtype=float)
    assert chi_square_statistic(t) == pytest.approx(chi_square_statistic(t.T), rel=1e-10)
    assert chi_square_statistic(t) >= 0


def test_statistic_guard_on_noisy_table():
    stat = chi_square_statistic(np.array([[-3.0, 2.0], [3.0, 40.0]]))
    assert math.isfinite(stat) and stat >= 0


def test_statistic_rejects_nonpositive_total():
    with pytest.raises(ValueError):
        chi_square_statistic(np.array([[-3.0, 1.0], [0.0, 1.0]]))


def test_margin_draw_zero_noise(rng):
    n = 10_000
    d = fima_margin_draw(np.array([n / 2, n / 2]), n, 1e12, 2, FimaConfig(), rng)
    assert np.allclose(d, 0.5, atol=0.03)


def test_margin_draw_single_cell_matches_count_recipe():
    # K_other = 1 is the single-count matching with table sensitivity 2
    n, eps = 50, 1.0
    cfg = FimaConfig(beta_sampler="inverse_cdf")
    a = fima_margin_draw(np.array([20.0]), n, eps, 1, cfg, np.random.default_rng(4))
    rng = np.random.default_rng(4)
    y = rng.laplace(0, 2 / (n * eps), (1, 1)).sum(axis=-1)
    from fima.core import draw_beta_shortcut
    b = draw_beta_shortcut(20.0 / n - y, n, cfg.delta, rng, "inverse_cdf")
    assert np.allclose(a, b)


def test_margin_noise_sum_variance(rng):
    # sum of K iid Laplace(b) has variance K * 2 b^2
    n, eps, K = 100, 0.5, 3
    b = 2 / (n * eps)
    params = PrivacyParams(eps, 2 / n, granularity=1 / n)
    from fima.mechanisms import sample_noise
    s = sample_noise(params, rng, (1_000_000, K)).sum(axis=1)
    assert s.var() == pytest.approx(K * 2 * b ** 2, rel=0.05)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10 ** 6), k1=st.integers(2, 4), k2=st.integers(2, 4))
def test_independence_probabilities_on_simplex(seed, k1, k2):
    rng = np.random.default_rng(seed)
    p = independence_probabilities(rng.uniform(1e-9, 1, k1), rng.uniform(1e-9, 1, k2))
    assert p.sum() == pytest.approx(1.0)
    assert np.all((p > 0) & (p < 1))


def test_null_draws_nonnegative_and_deterministic():
    table = ContingencyTable([[120.0, 130.0], [118.0, 140.0]], 500)
    a = fima_chisq_null(table, 0.5, FimaConfig(H=500), np.random.default_rng(11))
    b = fima_chisq_null(table, 0.5, FimaConfig(H=500), np.random.default_rng(11))
    assert np.array_equal(a, b)
    assert np.all(a >= 0)


def test_strongly_dependent_table_rejects(rng):
    raw = np.array([[400, 100], [100, 400]])
    params = PrivacyParams.for_count(10.0, sensitivity=2.0)
    dp = privatize_counts(raw, params, rng).values.reshape(2, 2)
    res = fima_chisq_test(ContingencyTable(dp, 1000), 10.0, FimaConfig(H=2000), rng)
    assert res.test.p_value < 0.01 and res.test.reject


def test_pvalue_in_range(rng):
    raw = rng.multinomial(300, [0.25] * 4).reshape(2, 2)
    res = fima_chisq_test(ContingencyTable(raw.astype(float), 300), 1.0, FimaConfig(H=1000), rng)
    assert 0 <= res.test.p_value <= 1


def test_zero_noise_null_matches_classical_bootstrap_level():
    # with vanishing noise the FIMA null is a multinomial bootstrap of the chi-squared statistic
    n, B = 5000, 500
    rejections = 0
    for b in range(B):
        rng = np.random.default_rng([7, b])
        raw = rng.multinomial(n, [0.25] * 4).reshape(2, 2).astype(float)
        res = fima_chisq_test(ContingencyTable(raw, n), 1e9, FimaConfig(H=500), rng)
        rejections += res.test.reject
    assert abs(rejections / B - 0.05) <= 0.02 + 2 * math.sqrt(0.05 * 0.95 / B)


def test_noisy_total_nonpositive_counts_as_extreme():
    from fima.chisq import _chisq_stats
    stats = _chisq_stats(np.array([[[1.0, -5.0], [1.0, 1.0]], [[5.0, 5.0], [5.0, 5.0]]]))
    assert stats[0] == np.inf and stats[1] == 0
