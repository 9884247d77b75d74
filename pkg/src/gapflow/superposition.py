"""Gap distribution of a superposition of independent renewal processes.

With ``L`` stationary components, the next event of the merged stream after
an arbitrary instant is the minimum of the component remaining times. A gap
starts at an event of the merged stream; the component that fired restarts
with a fresh headway while the others are in equilibrium. Weighting by the
share of flow of each component gives

    1 - F_G(g) = sum_j w_j S_j(g) prod_{k != j} R_k(g),   w_j = (1/mu_j) / sum_s (1/mu_s)

where ``S_j`` is the headway survival and ``R_k`` the remaining-time survival.
Evaluation is done in log space throughout; products of many small survival
terms would otherwise underflow in the far tail where likelihoods still need
finite logs.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .distributions import Exponential, HeadwayModel, _as_nonneg
from .errors import DomainError
from .residual import ResidualView, tail_limit

__all__ = [
    "SuperposedGapModel",
    "combined_residual",
    "gap_cdf",
    "gap_pdf",
    "exponential_gap_cdf",
]

# survival terms are floored here before taking logs; a product that loses
# one such factor still carries the others, so exact zeros stay harmless
_LOG_FLOOR = math.log(1e-300)
_CHUNK = 1 << 15


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - safe), axis=axis, keepdims=True)) + safe
    out = np.where(np.isneginf(m), -np.inf, out)
    return np.squeeze(out, axis=axis)


class SuperposedGapModel:
    """Gap distribution of ``L`` superposed renewal components.

    Parameters
    ----------
    components : sequence of HeadwayModel
        One entry per lane (orderly streams) or per abstract renewal
        process (disorderly streams). Order does not matter.
    """

    def __init__(self, components: Sequence[HeadwayModel]):
        comps = tuple(components)
        if not comps:
            raise DomainError("a superposed model needs at least one component")
        for c in comps:
            if not isinstance(c, HeadwayModel):
                raise DomainError(f"component {c!r} is not a HeadwayModel")
        self._components = comps
        self._residuals = tuple(ResidualView(c) for c in comps)
        self._flows = np.array([1.0 / c.mean for c in comps])
        with np.errstate(over="ignore"):
            total = self._flows.sum()
        if not np.all(np.isfinite(self._flows) & (self._flows > 0)) or not math.isfinite(total):
            raise DomainError("component means must be finite and positive with a finite total flow")
        self._log_flows = np.log(self._flows)

    @property
    def components(self) -> tuple[HeadwayModel, ...]:
        return self._components

    @property
    def residuals(self) -> tuple[ResidualView, ...]:
        return self._residuals

    @property
    def L(self) -> int:
        return len(self._components)

    @property
    def flows(self) -> np.ndarray:
        """Per-component flow ``1/mu_j`` in vehicles per second."""
        return self._flows.copy()

    @property
    def total_flow(self) -> float:
        return float(self._flows.sum())

    @property
    def weights(self) -> np.ndarray:
        """Share of merged-stream events contributed by each component."""
        return self._flows / self._flows.sum()

    @property
    def mean_gap(self) -> float:
        return 1.0 / self.total_flow

    def __eq__(self, other):
        if not isinstance(other, SuperposedGapModel):
            return NotImplemented
        return self._components == other._components

    def __hash__(self):
        return hash(self._components)

    def __repr__(self):
        return f"SuperposedGapModel({list(self._components)!r})"

    # log-space building blocks ----------------------------------------------

    def _log_terms(self, g: np.ndarray):
        """Per-component log quantities on a flat grid, each of shape (L, n).

        Returns log headway density, log headway survival, log residual
        density and floored log residual survival. Residuals are evaluated
        once per call and reused by every product below.
        """
        n = g.size
        log_fh = np.empty((self.L, n))
        log_sh = np.empty((self.L, n))
        log_rs = np.empty((self.L, n))
        with np.errstate(divide="ignore"):
            for j, res in enumerate(self._residuals):
                log_fh[j], log_sh[j], log_rs[j] = res.joint_logs(g)
        log_rd = log_sh - np.log(np.array([c.mean for c in self._components]))[:, None]
        np.maximum(log_rs, _LOG_FLOOR, out=log_rs)
        return log_fh, log_sh, log_rd, log_rs

    def _chunks(self, g):
        g = _as_nonneg(g)
        flat = g.ravel()
        for start in range(0, flat.size, _CHUNK):
            yield flat[start:start + _CHUNK]

    def _log_sf_chunk(self, g):
        _, log_sh, log_rd, log_rs = self._log_terms(g)
        total = log_rs.sum(axis=0)
        # (1/Lambda) sum_j r_j prod_{k != j} R_k
        terms = log_rd + (total - log_rs)
        out = np.minimum(_logsumexp(terms, axis=0) - math.log(self.total_flow), 0.0)
        # the weights sum to one only up to rounding; pin F_G(0) = 0
        return np.where(g == 0, 0.0, out)

    def _logpdf_chunk(self, g):
        log_fh, log_sh, log_rd, log_rs = self._log_terms(g)
        total = log_rs.sum(axis=0)
        log_w = self._log_flows - math.log(self.total_flow)
        # fresh-headway term: w_j f_Hj prod_{k != j} R_k
        first = log_w[:, None] + log_fh - log_rs
        if self.L == 1:
            return first[0] + total
        # residual-density term: (1/Lambda) sum_{j != k} r_j r_k prod_{m != j,k} R_m.
        # With a_j = r_j / R_j this is prod(R) * sum_j a_j * (sum_{k != j} a_k);
        # the inner sums come from exclusive prefix/suffix log-sums, so every
        # addition is of positive terms.
        log_a = log_rd - log_rs
        shift = np.max(log_a, axis=0)
        shift = np.where(np.isfinite(shift), shift, 0.0)
        a = np.exp(log_a - shift)
        csum = np.cumsum(a, axis=0)
        prefix = np.vstack([np.zeros((1, a.shape[1])), csum[:-1]])
        suffix = np.cumsum(a[::-1], axis=0)[::-1]
        suffix = np.vstack([suffix[1:], np.zeros((1, a.shape[1]))])
        with np.errstate(divide="ignore"):
            log_others = np.log(prefix + suffix) + shift
        second = log_a + log_others - math.log(self.total_flow)
        return _logsumexp(np.concatenate([first, second], axis=0), axis=0) + total

    def _apply(self, fn, g):
        arr = _as_nonneg(g)
        if arr.size == 0:
            return np.empty(arr.shape)
        out = np.concatenate([fn(c) for c in self._chunks(arr)])
        out = out.reshape(arr.shape)
        return out if arr.ndim else float(out)

    # public evaluation ------------------------------------------------------

    def logsf(self, g):
        return self._apply(self._log_sf_chunk, g)

    def sf(self, g):
        return np.exp(self.logsf(g))

    def cdf(self, g):
        return 0.0 - np.expm1(self.logsf(g))

    def logpdf(self, g):
        return self._apply(self._logpdf_chunk, g)

    def pdf(self, g):
        return np.exp(self.logpdf(g))

    def combined_residual(self, y):
        """Return ``(cdf, pdf)`` of the merged-stream remaining time at ``y``."""
        arr = _as_nonneg(y)
        logs = self._apply(lambda c: self._log_terms(c)[3].sum(axis=0), arr)
        cdf = -np.expm1(logs)
        # combined remaining-time density equals total flow times gap survival
        pdf = self.total_flow * self.sf(arr)
        return cdf, pdf

    def upper_limit(self, eps: float = 1e-14) -> float:
        """A gap length beyond which the gap survival is below ``eps``."""
        upper = max(tail_limit(c, eps) for c in self._components)
        return float(upper)


def _model(obj) -> SuperposedGapModel:
    if isinstance(obj, SuperposedGapModel):
        return obj
    if isinstance(obj, HeadwayModel):
        return SuperposedGapModel([obj])
    return SuperposedGapModel(obj)


def combined_residual(model, y):
    """Cdf and pdf of the remaining time on the merged stream."""
    return _model(model).combined_residual(y)


def gap_cdf(model, g):
    """Cdf of gaps between successive events of the merged stream."""
    return _model(model).cdf(g)


def gap_pdf(model, g):
    """Density of gaps between successive events of the merged stream."""
    return _model(model).pdf(g)


def exponential_gap_cdf(rates: Sequence[float]) -> Callable:
    """Closed-form gap cdf for superposed Poisson streams.

    Superposed Poisson processes are Poisson with the summed rate, so the
    returned callable is ``g -> 1 - exp(-sum(rates) * g)``.
    """
    rates = [float(r) for r in rates]
    if not rates:
        raise DomainError("at least one rate is required")
    for r in rates:
        Exponential(r)  # validates positivity
    total = math.fsum(rates)

    def cdf(g):
        g = _as_nonneg(g)
        out = -np.expm1(-total * g)
        return out if out.ndim else float(out)

    cdf.total_rate = total
    return cdf
