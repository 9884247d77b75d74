import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from gapflow import Exponential, Gamma, LogLogistic, ResidualView, residual_cdf, residual_cdf_quadrature, residual_pdf
from oracles import frozen


def test_exponential_residual_pdf_at_zero():
    assert residual_pdf(Exponential(1.0), 0.0) == 1.0


def test_gamma2_residual_pdf_hand_value():
    # survival of Gamma(2,1) is e^{-y}(1+y), mean 2
    assert residual_pdf(Gamma(2.0, 1.0), 1.0) == pytest.approx(math.exp(-1.0), rel=1e-14)


def test_gamma2_residual_cdf_hand_value():
    # integral_0^y e^{-h}(1+h) dh = 2 - e^{-y}(2+y)
    assert residual_cdf(Gamma(2.0, 1.0), 1.0) == pytest.approx(1.0 - 1.5 * math.exp(-1.0), rel=1e-14)


def test_exponential_residual_cdf_at_one():
    assert residual_cdf(Exponential(1.0), 1.0) == pytest.approx(1.0 - math.exp(-1.0), rel=1e-15)


@pytest.mark.parametrize("model", [Exponential(2.0), Gamma(0.7, 0.3), Gamma(5.0, 2.0), LogLogistic(1.0, 3.0)], ids=repr)
def test_boundaries(model):
    v = ResidualView(model)
    assert v.cdf(0.0) == 0.0
    assert v.pdf(0.0) == pytest.approx(1.0 / model.mean, rel=1e-15)
    far = 1e6 * model.mean
    assert v.pdf(far) < 1e-6
    assert v.cdf(far) == pytest.approx(1.0, abs=1e-6)


def _reference_grid(dist, grid):
    # piecewise quadrature between successive grid points, accumulated
    pieces = [integrate.quad(dist.sf, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)[0] for a, b in zip(grid[:-1], grid[1:])]
    return np.concatenate([[0.0], np.cumsum(pieces)]) / dist.mean()


@pytest.mark.parametrize("family", ["exponential", "gamma", "loglogistic"])
def test_closed_form_matches_quadrature_oracle(family):
    rng = np.random.default_rng({"exponential": 1, "gamma": 2, "loglogistic": 3}[family])
    for _ in range(20):
        if family == "exponential":
            model = Exponential(rng.uniform(0.1, 5.0))
        elif family == "gamma":
            model = Gamma(rng.uniform(0.2, 12.0), rng.uniform(0.1, 5.0))
        else:
            model = LogLogistic(rng.uniform(0.2, 5.0), rng.uniform(1.2, 8.0))
        dist = frozen(family, model.params)
        grid = np.linspace(0.0, dist.ppf(0.999), 200)
        np.testing.assert_allclose(residual_cdf(model, grid), _reference_grid(dist, grid), atol=1e-8, rtol=0)


def test_quadrature_path_matches_closed_form():
    m = Gamma(2.7, 1.1)
    y = np.linspace(0.0, 12.0, 25)
    np.testing.assert_allclose(residual_cdf_quadrature(m, y), residual_cdf(m, y), atol=1e-8)


@given(st.floats(0.05, 10.0))
def test_memorylessness(lam):
    y = np.linspace(0.0, 10.0 / lam, 50)
    e = Exponential(lam)
    np.testing.assert_allclose(residual_cdf(e, y), e.cdf(y), rtol=1e-12, atol=1e-300)


@given(st.sampled_from(["exponential", "gamma", "loglogistic"]), st.floats(0.2, 4.0), st.floats(1.2, 6.0))
def test_derivative_of_cdf_is_pdf(family, a, b):
    model = {"exponential": Exponential(a), "gamma": Gamma(b, a), "loglogistic": LogLogistic(a, b)}[family]
    h = 1e-5
    y = np.linspace(0.05, 5.0, 40) * model.mean
    fd = (residual_cdf(model, y + h) - residual_cdf(model, y - h)) / (2 * h)
    np.testing.assert_allclose(fd, residual_pdf(model, y), atol=1e-5)


@given(st.floats(0.2, 8.0), st.floats(0.1, 4.0))
def test_cdf_monotone_and_bounded(k, lam):
    y = np.geomspace(1e-8, 1e4, 300)
    F = residual_cdf(Gamma(k, lam), y)
    assert np.all(np.diff(F) >= 0)
    assert np.all((F >= 0) & (F <= 1))


def test_view_reports_closed_form():
    assert ResidualView(Gamma(2.0, 1.0)).has_closed_form
    assert ResidualView(LogLogistic(1.0, 2.0)).mean_headway == pytest.approx(LogLogistic(1.0, 2.0).mean)


def test_loglogistic_survival_near_origin_with_steep_shape():
    # the headway survival rounds to 1 here; the remaining-time survival must not
    m = LogLogistic(3.48, 7.5)
    y = 0.004
    assert float(m.sf(y)) == 1.0
    assert residual_cdf(m, y) == pytest.approx(y / m.mean, rel=1e-9)
    assert ResidualView(m).sf(y) == pytest.approx(1.0 - y / m.mean, rel=1e-12)
