import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from anchors import LOOKALIKE_A, OBSERVED_MEAN_GAP, THREE_LANE, MIXED_PAIR
from gapflow import (
    DomainError,
    Exponential,
    Gamma,
    LogLogistic,
    SuperposedGapModel,
    combined_residual,
    exponential_gap_cdf,
    gap_cdf,
    gap_pdf,
    residual_cdf,
    residual_pdf,
)
from oracles import conditional_pdf, conditional_sf, frozen, residual_cdf_by_quad

rates = st.lists(st.floats(0.05, 5.0), min_size=1, max_size=5)


def gamma_model(pairs):
    return SuperposedGapModel([Gamma(k, lam) for k, lam in pairs])


def random_model(rng, L=None, mixed=False):
    L = L or int(rng.integers(1, 6))
    comps = []
    for _ in range(L):
        kind = rng.integers(0, 3) if mixed else 1
        if kind == 0:
            comps.append(Exponential(rng.uniform(0.1, 3.0)))
        elif kind == 1:
            comps.append(Gamma(rng.uniform(0.4, 6.0), rng.uniform(0.2, 3.0)))
        else:
            comps.append(LogLogistic(rng.uniform(0.3, 4.0), rng.uniform(2.0, 8.0)))
    return SuperposedGapModel(comps)


def test_single_component_combined_residual_is_its_residual():
    m = Gamma(2.3, 0.9)
    y = np.linspace(0.0, 10.0, 41)
    cdf, pdf = combined_residual(m, y)
    np.testing.assert_allclose(cdf, residual_cdf(m, y), atol=1e-15)
    np.testing.assert_allclose(pdf, residual_pdf(m, y), rtol=1e-13)


def test_two_exponential_combined_residual():
    cdf, pdf = combined_residual([Exponential(1.0), Exponential(2.0)], 0.5)
    assert cdf == pytest.approx(1.0 - math.exp(-1.5), rel=1e-14)
    assert pdf == pytest.approx(3.0 * math.exp(-1.5), rel=1e-13)


def test_three_lane_combined_residual_against_quadrature_composition():
    dists = [frozen("gamma", p) for p in THREE_LANE]
    R = [1.0 - residual_cdf_by_quad(d, 0.5) for d in dists]
    expected_cdf = 1.0 - math.prod(R)
    r = [d.sf(0.5) / d.mean() for d in dists]
    expected_pdf = sum(r[j] * math.prod(R[k] for k in range(3) if k != j) for j in range(3))
    cdf, pdf = combined_residual(gamma_model(THREE_LANE), 0.5)
    assert cdf == pytest.approx(expected_cdf, abs=1e-12)
    assert pdf == pytest.approx(expected_pdf, rel=1e-11)


@given(rates)
def test_exponential_closure(lams):
    g = np.linspace(0.0, 10.0, 200)
    model = SuperposedGapModel([Exponential(x) for x in lams])
    total = sum(lams)
    np.testing.assert_allclose(gap_cdf(model, g), -np.expm1(-total * g), atol=1e-9)
    np.testing.assert_allclose(gap_pdf(model, g), total * np.exp(-total * g), rtol=1e-9)
    np.testing.assert_allclose(gap_cdf(model, g), exponential_gap_cdf(lams)(g), atol=1e-9)


def test_exponential_gap_cdf_values():
    assert exponential_gap_cdf([1.0, 2.0])(1.0) == pytest.approx(1.0 - math.exp(-3.0), rel=1e-15)
    assert exponential_gap_cdf([0.7])(2.0) == pytest.approx(Exponential(0.7).cdf(2.0), rel=1e-15)
    g = np.linspace(0.0, 20.0, 100)
    np.testing.assert_allclose(
        exponential_gap_cdf([0.5] * 4)(g), gap_cdf([Exponential(0.5)] * 4, g), atol=1e-9
    )
    with pytest.raises(DomainError):
        exponential_gap_cdf([])
    with pytest.raises(DomainError):
        exponential_gap_cdf([1.0, 0.0])


def test_single_component_gap_is_headway():
    m = LogLogistic(1.4, 3.5)
    g = np.linspace(0.0, 20.0, 101)
    np.testing.assert_allclose(gap_cdf(m, g), m.cdf(g), atol=1e-15)
    np.testing.assert_allclose(gap_pdf(m, g), m.pdf(g), rtol=1e-13)


def test_mixed_pair_mean_gap():
    model = gamma_model(MIXED_PAIR)
    mean, _ = integrate.quad(lambda g: float(model.sf(g)), 0.0, np.inf, limit=500, epsabs=1e-12)
    assert mean == pytest.approx(model.mean_gap, rel=1e-4)
    assert mean == pytest.approx(0.634, abs=5e-4)
    assert round(mean, 2) == OBSERVED_MEAN_GAP


def test_three_lane_mean_gap():
    mean = gamma_model(THREE_LANE).mean_gap
    assert mean == pytest.approx(1.0 / sum(lam / k for k, lam in THREE_LANE), rel=1e-15)
    assert round(mean, 2) == OBSERVED_MEAN_GAP


def test_boundaries_and_pdf_at_zero():
    model = gamma_model(LOOKALIKE_A)
    assert model.cdf(0.0) == 0.0
    assert model.sf(0.0) == 1.0
    # at g=0 only fresh headways of components with k<=1 or the
    # residual cross terms contribute; all k>1 here
    expected = sum(model.flows[j] * model.flows[k] for j in range(4) for k in range(4) if j != k) / model.total_flow
    assert model.pdf(0.0) == pytest.approx(expected, rel=1e-12)


def test_far_tail_is_finite():
    model = gamma_model(THREE_LANE)
    g = np.array([50.0, 200.0, 1e3, 1e5])
    assert np.all(np.isfinite(model.logpdf(g)))
    assert np.all(model.pdf(g) >= 0)
    assert not np.any(np.isnan(model.cdf(g)))
    assert model.cdf(1e5) == 1.0


def test_negative_gap_rejected():
    with pytest.raises(DomainError):
        gap_cdf(Gamma(2.0, 1.0), -1.0)


def test_empty_model_rejected():
    with pytest.raises(DomainError):
        SuperposedGapModel([])


def test_conditional_decomposition_equivalence(rng):
    for _ in range(20):
        model = random_model(rng, mixed=True)
        dists = [frozen(c.family.value, c.params) for c in model.components]
        g = rng.uniform(0.0, 4.0 * model.mean_gap * model.L, size=5)
        for gi in g:
            assert model.sf(gi) == pytest.approx(conditional_sf(dists, gi), abs=1e-10)
            assert model.pdf(gi) == pytest.approx(conditional_pdf(dists, gi), abs=1e-10)


def test_normalization_and_derivative(rng):
    for _ in range(20):
        model = random_model(rng)
        upper = model.upper_limit()
        total, _ = integrate.quad(lambda g: float(model.pdf(g)), 0.0, upper, limit=1000, epsabs=1e-10)
        assert total == pytest.approx(1.0, abs=1e-6)
        g = np.linspace(0.01, 10.0, 400)
        h = 1e-5
        fd = (model.cdf(g + h) - model.cdf(g - h)) / (2 * h)
        assert np.max(np.abs(fd - model.pdf(g))) < 1e-5


def test_mean_identity(rng):
    for _ in range(10):
        model = random_model(rng)
        mean, _ = integrate.quad(lambda g: float(model.sf(g)), 0.0, model.upper_limit(), limit=1000)
        assert mean == pytest.approx(model.mean_gap, rel=1e-4)


@given(st.permutations(range(4)))
def test_permutation_invariance(order):
    comps = [Gamma(k, lam) for k, lam in LOOKALIKE_A]
    g = np.linspace(0.0, 12.0, 97)
    a = SuperposedGapModel(comps)
    b = SuperposedGapModel([comps[i] for i in order])
    np.testing.assert_allclose(a.cdf(g), b.cdf(g), atol=1e-12)
    np.testing.assert_allclose(a.pdf(g), b.pdf(g), atol=1e-12)


@given(st.integers(1, 5), st.floats(0.3, 6.0), st.floats(0.2, 3.0))
def test_cdf_monotone(L, k, lam):
    model = SuperposedGapModel([Gamma(k * (1 + 0.3 * j), lam / (1 + j)) for j in range(L)])
    g = np.concatenate([[0.0], np.geomspace(1e-6, 1e3, 300)])
    F = model.cdf(g)
    assert np.all(np.diff(F) >= -1e-15)
    assert np.all((F >= 0) & (F <= 1))


def test_palm_khintchine_limit():
    lam = 1.0
    model = SuperposedGapModel([Gamma(4.0, lam)] * 20)
    mu = model.mean_gap
    g = np.linspace(0.0, 10.0 * mu, 5000)
    ks = np.max(np.abs(model.cdf(g) + np.expm1(-g / mu)))
    assert ks < 0.02


def test_scalar_in_scalar_out():
    model = gamma_model(MIXED_PAIR)
    assert isinstance(model.pdf(1.0), float)
    assert model.pdf(np.array([1.0])).shape == (1,)
    assert model.pdf(np.ones((2, 3))).shape == (2, 3)
    assert model.pdf(np.array([])).shape == (0,)


def test_weights_and_flows():
    model = gamma_model(MIXED_PAIR)
    mus = [k / lam for k, lam in MIXED_PAIR]
    np.testing.assert_allclose(model.flows, [1 / m for m in mus])
    assert model.weights.sum() == pytest.approx(1.0)
    assert model == gamma_model(MIXED_PAIR)


def test_degenerate_flows_rejected():
    with pytest.raises(DomainError):
        SuperposedGapModel([Gamma(1e300, 1e-300)])
    with pytest.raises(DomainError):
        SuperposedGapModel([Exponential(1e308), Exponential(1e308)])
