import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fima.core import FimaConfig, MACHINE_DELTA
from fima.logistic import LogisticDesign, beta_draws, inv_logit, logistic_inference, logit
from fima.mechanisms import PrivacyParams, privatize_counts


def test_logit_values():
    assert logit(0.5) == 0
    assert inv_logit(logit(0.3)) == pytest.approx(0.3, abs=1e-12)
    # oracle: 1 / (1 + e^-1)
    p = 1 / (1 + np.exp(-1.0))
    assert p == pytest.approx(0.7310586, abs=1e-7)
    assert logit(0.7310586) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_logit_domain(p):
    with pytest.raises(ValueError):
        logit(p)


def test_logit_finite_on_draw_range():
    assert np.isfinite(logit(np.array([MACHINE_DELTA, 1 - MACHINE_DELTA]))).all()


def test_inv_logit_extremes():
    assert inv_logit(-800.0) == 0.0
    assert inv_logit(800.0) == 1.0


def test_logit_derivative_finite_differences(rng):
    p = rng.uniform(0.01, 0.99, 10)
    h = 1e-6
    fd = (logit(p + h) - logit(p - h)) / (2 * h)
    analytic = 1 / (p * (1 - p))
    assert np.max(np.abs(fd - analytic) / analytic) < 1e-6


def test_beta_draws_half():
    d = beta_draws([np.full(10, 0.5), np.full(10, 0.5)], LogisticDesign.one_binary_predictor())
    assert np.all(d["beta0"] == 0) and np.all(d["beta1"] == 0)


def test_beta_draws_unit_slope():
    d = beta_draws([np.full(4, 0.5), np.full(4, 0.7310586)], LogisticDesign.one_binary_predictor())
    assert np.allclose(d["beta1"], 1.0, atol=1e-6)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10 ** 6), design=st.sampled_from(["one", "two", "sat"]))
def test_roundtrip_identity(seed, design):
    des = {"one": LogisticDesign.one_binary_predictor(),
           "two": LogisticDesign.two_binary_predictors(),
           "sat": LogisticDesign.saturated(5)}[design]
    rng = np.random.default_rng(seed)
    cells = [rng.uniform(MACHINE_DELTA, 1 - MACHINE_DELTA, 50) for _ in range(des.n_cells)]
    d = beta_draws(cells, des)
    assert np.allclose(inv_logit(d["beta0"]), cells[des.reference_cell], atol=1e-12)
    for name, idx in des.contrasts.items():
        assert np.allclose(inv_logit(d["beta0"] + d[name]), cells[idx], atol=1e-12)


def test_mismatched_h():
    with pytest.raises(ValueError):
        beta_draws([np.full(3, 0.5), np.full(4, 0.5)], LogisticDesign.one_binary_predictor())


def test_design_validation():
    with pytest.raises(ValueError):
        LogisticDesign("saturated", (1, 2), 5)
    with pytest.raises(ValueError):
        LogisticDesign("saturated", (1, 1), 0)
    sat = LogisticDesign.saturated(3)
    assert sat.reference_cell == 2 and sat.coefficients == ["beta0", "beta1", "beta2"]


def test_consistency_shrinks_to_truth(rng):
    design = LogisticDesign.two_binary_predictors()
    thetas = np.array([0.3, 0.5, 0.4, 0.6])
    n_cell = 1_000_000
    counts = thetas * n_cell
    res = logistic_inference(counts, n_cell, 1e9, design, FimaConfig(H=2000), rng)
    truth = design.true_coefficients(thetas)
    for name, ci in res.intervals.items():
        assert ci.length < 0.03
        assert truth[name] in ci


def test_interval_lengths_decrease_with_n(rng):
    design = LogisticDesign.one_binary_predictor()
    thetas = np.array([0.3, 0.5])
    params = PrivacyParams.for_count(1.0)
    lengths = []
    for n_cell in (50, 250, 1000):
        x = privatize_counts(np.round(thetas * n_cell), params, rng, n=n_cell).values
        res = logistic_inference(x, n_cell, 1.0, design, FimaConfig(H=4000), rng)
        lengths.append(res.intervals["beta0"].length)
    assert lengths[0] > lengths[1] > lengths[2]
