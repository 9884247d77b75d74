"""Equilibrium (remaining-time) distribution of one renewal component.

For a stationary renewal process with headway cdf ``F`` and mean ``mu`` the
time from an arbitrary instant to the next event has density
``(1 - F(y)) / mu`` and cdf ``(1/mu) * integral_0^y (1 - F(h)) dh``.

Gamma, exponential and log-logistic headways have closed forms for the
integral. Any other family falls back to adaptive Gauss-Kronrod quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .distributions import Family, HeadwayModel, _as_nonneg
from .errors import NumericError
from .gammainc import regularized_gamma

__all__ = [
    "ResidualView",
    "residual_pdf",
    "residual_cdf",
    "residual_cdf_quadrature",
]

# survival below this is treated as the end of the support
TAIL_EPS = 1e-14
QUAD_LIMIT = 10_000


def _gamma_parts(k, x):
    q = regularized_gamma(k, x)[1]
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        # x * (standard gamma density at x) = x**k e**-x / Gamma(k)
        log_xf = special.xlogy(k, x) - x - special.gammaln(k)
        xf = np.exp(log_xf)
        lower = x <= k
        # P(k+1, x) = P(k, x) - xf/k; the cancellation for small x only
        # touches a term that is negligible next to x*Q/k
        cdf_direct = (1.0 - q) - xf / k + (x / k) * q
        # integral_x^inf Q(k, t) dt / k; loses ~log10(x) digits for x >> k
        sf_direct = (xf + (k - x) * q) / k
    cdf = np.clip(np.where(lower, cdf_direct, 1.0 - sf_direct), 0.0, 1.0)
    sf = np.clip(np.where(lower, 1.0 - cdf_direct, sf_direct), 0.0, 1.0)
    return q, log_xf, cdf, sf


def _gamma_residual(model, y):
    k, lam = model.params
    _, _, cdf, sf = _gamma_parts(k, lam * y)
    return cdf, sf


def _gamma_joint(model, y):
    k, lam = model.params
    x = lam * y
    q, log_xf, _, sf = _gamma_parts(k, x)
    with np.errstate(divide="ignore"):
        # log f_H(y) = log(x f(x)) - log y + log lam
        log_fh = special.xlogy(k - 1.0, x) - x - special.gammaln(k) + math.log(lam)
        return log_fh, np.log(q), np.log(sf)


def _exponential_residual(model, y):
    return model.cdf(y), model.sf(y)


def _loglogistic_residual(model, y):
    # substituting s = F(h) turns the integral into an incomplete beta
    # function with parameters (1/beta, 1 - 1/beta) evaluated at F(y)
    a = 1.0 / model.shape
    F, S = model.cdf(y), model.sf(y)
    # each form is accurate only where its argument is not rounded against 1
    lower = F <= 0.5
    cdf_direct = special.betainc(a, 1.0 - a, F)
    sf_direct = special.betainc(1.0 - a, a, S)
    cdf = np.where(lower, cdf_direct, 1.0 - sf_direct)
    sf = np.where(lower, 1.0 - cdf_direct, sf_direct)
    return cdf[()], sf[()]


_CLOSED_FORMS = {
    Family.GAMMA: _gamma_residual,
    Family.EXPONENTIAL: _exponential_residual,
    Family.LOGLOGISTIC: _loglogistic_residual,
}


def tail_limit(model: HeadwayModel, eps: float = TAIL_EPS) -> float:
    """Smallest power-of-two multiple of the mean where survival drops below ``eps``."""
    upper = model.mean
    while float(model.sf(upper)) >= eps:
        upper *= 2.0
        if upper > 1e12 * model.mean:
            break
    return upper


def residual_cdf_quadrature(model: HeadwayModel, y, tol: float = 1e-8):
    """Residual cdf by adaptive quadrature of the headway survival function.

    Used for families without a closed form, and as a brute-force oracle.
    Raises :class:`NumericError` when the requested absolute tolerance is
    not reached within the subdivision cap.
    """
    y = _as_nonneg(y)
    mu = model.mean
    upper = tail_limit(model)

    def survival(h):
        return float(model.sf(h))

    flat = y.ravel()
    out = np.empty_like(flat)
    for i, yi in enumerate(flat):
        if yi == 0.0:
            out[i] = 0.0
            continue
        if yi >= upper:
            out[i] = 1.0
            continue
        val, err, _info = integrate.quad(
            survival, 0.0, yi, epsabs=tol * mu, epsrel=0.0, limit=QUAD_LIMIT, full_output=1
        )[:3]
        if err > tol * mu:
            raise NumericError(
                f"residual quadrature reached abs error {err / mu:.3g} > {tol:.3g} at y={yi}"
            )
        out[i] = min(max(val / mu, 0.0), 1.0)
    return out.reshape(y.shape)


@dataclass(frozen=True)
class ResidualView:
    """Remaining-time distribution of ``source`` in the large-time limit."""

    source: HeadwayModel
    tol: float = 1e-8

    @property
    def mean_headway(self) -> float:
        return self.source.mean

    @property
    def has_closed_form(self) -> bool:
        return self.source.family in _CLOSED_FORMS

    def pdf(self, y):
        return self.source.sf(y) / self.source.mean

    def logpdf(self, y):
        return self.source.logsf(y) - math.log(self.source.mean)

    def joint_logs(self, y):
        """Log headway density, log headway survival and log residual survival.

        Shares special-function evaluations between the three where the
        family allows it; used by the gap distribution's inner loop.
        """
        y = _as_nonneg(y)
        if self.source.family is Family.GAMMA:
            return _gamma_joint(self.source, y)
        with np.errstate(divide="ignore"):
            return self.source.logpdf(y), self.source.logsf(y), np.log(self.sf(y))

    def cdf_sf(self, y):
        """Return ``(cdf, sf)`` evaluated together."""
        y = _as_nonneg(y)
        fn = _CLOSED_FORMS.get(self.source.family)
        if fn is None:
            cdf = residual_cdf_quadrature(self.source, y, self.tol)
            return cdf, 1.0 - cdf
        return fn(self.source, y)

    def cdf(self, y):
        return self.cdf_sf(y)[0]

    def sf(self, y):
        return self.cdf_sf(y)[1]


def _view(obj) -> ResidualView:
    return obj if isinstance(obj, ResidualView) else ResidualView(obj)


def residual_pdf(view, y):
    """Density of the remaining time, ``(1 - F_H(y)) / mu``."""
    return _view(view).pdf(y)


def residual_cdf(view, y):
    """Cdf of the remaining time, ``(1/mu) * integral_0^y (1 - F_H(h)) dh``."""
    return _view(view).cdf(y)
