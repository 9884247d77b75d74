"""Renewal-hypothesis check and goodness of fit for gap samples."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DataError, DomainError
from .superposition import SuperposedGapModel

__all__ = [
    "RenewalTestResult",
    "GofResult",
    "DensityTable",
    "renewal_test",
    "ks_gof",
    "density_table",
]


@dataclass(frozen=True)
class RenewalTestResult:
    statistic: float
    p_value: float
    n: int
    method: str
    alpha: float
    serial_correlation: float

    @property
    def reject(self) -> bool:
        return self.p_value < self.alpha


@dataclass(frozen=True)
class GofResult:
    ks_statistic: float
    p_value: float
    n: int
    model: SuperposedGapModel


def renewal_test(gaps, alpha: float = 0.05) -> RenewalTestResult:
    """Test independence of successive gaps with the lag-1 rank serial correlation.

    Under the renewal hypothesis successive intervals are independent, so the
    Spearman-type serial correlation ``r1`` of the interval ranks is close to
    zero and ``z = r1 * sqrt(n - 1)`` is approximately standard normal. The
    test is two-sided and distribution-free.

    Parameters
    ----------
    gaps : array_like
        Gap sequence in time order, at least 30 values.
    alpha : float
        Significance level for :attr:`RenewalTestResult.reject`.
    """
    x = np.asarray(gaps, dtype=float).ravel()
    if x.size < 30:
        raise DomainError(f"renewal test needs at least 30 gaps, got {x.size}")
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    if np.all(x == x[0]):
        raise DataError("constant gap sequence; serial correlation is undefined")
    r = stats.rankdata(x)
    d = r - r.mean()
    r1 = float(np.dot(d[:-1], d[1:]) / np.dot(d, d))
    n = x.size
    z = r1 * math.sqrt(n - 1)
    p = float(2.0 * stats.norm.sf(abs(z)))
    return RenewalTestResult(
        statistic=z,
        p_value=min(max(p, 0.0), 1.0),
        n=n,
        method="rank lag-1 serial correlation",
        alpha=alpha,
        serial_correlation=r1,
    )


def ks_statistic(sorted_sample: np.ndarray, model_cdf: np.ndarray) -> float:
    n = sorted_sample.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - model_cdf), np.max(model_cdf - (i - 1) / n)))


def ks_gof(gaps, model) -> GofResult:
    """One-sample Kolmogorov-Smirnov test of gaps against the model gap cdf.

    The p-value uses the asymptotic Kolmogorov distribution without a small
    sample correction; expect it to be rough below about 100 gaps.
    """
    if not isinstance(model, SuperposedGapModel):
        model = SuperposedGapModel([model] if not isinstance(model, (list, tuple)) else model)
    x = np.sort(np.asarray(gaps, dtype=float).ravel())
    if x.size == 0:
        raise DomainError("empty gap sample")
    d = ks_statistic(x, model.cdf(x))
    p = float(stats.kstwobign.sf(math.sqrt(x.size) * d))
    return GofResult(ks_statistic=d, p_value=p, n=int(x.size), model=model)


@dataclass
class DensityTable:
    """Histogram density of gaps next to the model pdf at the bin centers.

    Empirical densities are normalized by the full sample size, so mass
    beyond ``g_max`` is simply missing from the table; it is reported in
    ``mass_beyond``.
    """

    bin_center: np.ndarray
    empirical_density: np.ndarray
    model_pdf: np.ndarray
    bin_width: float
    n: int
    mass_beyond: float

    def rows(self):
        return zip(self.bin_center, self.empirical_density, self.model_pdf)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_center", "empirical_density", "model_pdf"])
            for row in self.rows():
                w.writerow([repr(float(v)) for v in row])


def density_table(gaps, model, bins: int = 60, g_max: float | None = None) -> DensityTable:
    if int(bins) != bins or bins < 5:
        raise DomainError("bins must be an integer >= 5")
    if not isinstance(model, SuperposedGapModel):
        model = SuperposedGapModel([model])
    x = np.asarray(gaps, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("empty gap sample")
    if g_max is None:
        g_max = float(np.quantile(x, 0.99))
    if not g_max > 0:
        raise DomainError("g_max must be positive")
    edges = np.linspace(0.0, g_max, int(bins) + 1)
    counts, _ = np.histogram(x, bins=edges)
    width = edges[1] - edges[0]
    centers = 0.5 * (edges[:-1] + edges[1:])
    return DensityTable(
        bin_center=centers,
        empirical_density=counts / (x.size * width),
        model_pdf=model.pdf(centers),
        bin_width=float(width),
        n=int(x.size),
        mass_beyond=float(np.count_nonzero(x > g_max) / x.size),
    )
