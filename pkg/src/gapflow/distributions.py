"""Parametric headway (inter-event time) distributions.

Each lane, or each abstract renewal component of a disorderly stream, has
i.i.d. headways drawn from one of the families below. Models are immutable
and validated at construction; evaluation methods are vectorized over ``y``.
"""

from __future__ import annotations

import enum
import math

import numpy as np
from scipy import special

from .errors import DomainError
from .gammainc import regularized_gamma

__all__ = [
    "Family",
    "HeadwayModel",
    "Exponential",
    "Gamma",
    "LogLogistic",
    "make_headway_model",
    "headway_eval",
    "sample_headways",
]


class Family(str, enum.Enum):
    """Supported headway distribution families."""

    EXPONENTIAL = "exponential"
    GAMMA = "gamma"
    LOGLOGISTIC = "loglogistic"

    @property
    def n_params(self) -> int:
        return len(_CLASSES[self].param_names)

    @property
    def param_names(self) -> tuple[str, ...]:
        return _CLASSES[self].param_names

    @classmethod
    def parse(cls, value) -> "Family":
        if isinstance(value, Family):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        for member in cls:
            if member.value == key or member.name.lower() == key:
                return member
        raise DomainError(f"unknown headway family {value!r}")


def _as_nonneg(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if np.any(np.isnan(y)):
        raise DomainError("headway argument contains NaN")
    if np.any(y < 0):
        raise DomainError("headway argument must be nonnegative")
    return y


class HeadwayModel:
    """Base class for a single renewal component.

    Subclasses define ``family``, ``param_names`` and the evaluation
    primitives. Instances compare equal when family and parameters match.
    """

    family: Family
    param_names: tuple[str, ...] = ()

    def __init__(self, *params: float):
        values = tuple(float(p) for p in params)
        if len(values) != len(self.param_names):
            raise DomainError(
                f"{type(self).__name__} takes {len(self.param_names)} parameters, "
                f"got {len(values)}"
            )
        for name, value in zip(self.param_names, values):
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be a finite positive number, got {value!r}")
        self._params = values
        self._validate()

    def _validate(self) -> None:
        pass

    @property
    def params(self) -> tuple[float, ...]:
        return self._params

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.param_names, self._params))

    def __eq__(self, other):
        if not isinstance(other, HeadwayModel):
            return NotImplemented
        return self.family is other.family and self._params == other._params

    def __hash__(self):
        return hash((self.family, self._params))

    def __repr__(self):
        args = ", ".join(f"{n}={v!r}" for n, v in zip(self.param_names, self._params))
        return f"{type(self).__name__}({args})"

    # evaluation -----------------------------------------------------------

    @property
    def mean(self) -> float:
        raise NotImplementedError

    @property
    def var(self) -> float:
        raise NotImplementedError

    def pdf(self, y):
        return np.exp(self.logpdf(y))

    def logpdf(self, y):
        raise NotImplementedError

    def cdf(self, y):
        raise NotImplementedError

    def sf(self, y):
        raise NotImplementedError

    def logsf(self, y):
        with np.errstate(divide="ignore"):
            return np.log(self.sf(y))

    def _draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def sample(self, n: int, seed=None) -> np.ndarray:
        """Draw ``n`` headways; see :func:`sample_headways`."""
        return sample_headways(self, n, seed)


class Exponential(HeadwayModel):
    """Exponential headways with rate ``rate`` (per second)."""

    family = Family.EXPONENTIAL
    param_names = ("rate",)

    @property
    def rate(self) -> float:
        return self._params[0]

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    @property
    def var(self) -> float:
        return 1.0 / self.rate**2

    def logpdf(self, y):
        y = _as_nonneg(y)
        return math.log(self.rate) - self.rate * y

    def cdf(self, y):
        y = _as_nonneg(y)
        return -np.expm1(-self.rate * y)

    def sf(self, y):
        y = _as_nonneg(y)
        return np.exp(-self.rate * y)

    def logsf(self, y):
        y = _as_nonneg(y)
        return -self.rate * y

    def _draw(self, rng, n):
        return rng.exponential(1.0 / self.rate, size=n)


class Gamma(HeadwayModel):
    """Gamma headways with shape ``shape`` (k) and rate ``rate`` (lambda).

    The cdf is the regularized lower incomplete gamma function P(k, rate*y).
    """

    family = Family.GAMMA
    param_names = ("shape", "rate")

    @property
    def shape(self) -> float:
        return self._params[0]

    @property
    def rate(self) -> float:
        return self._params[1]

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    @property
    def var(self) -> float:
        return self.shape / self.rate**2

    def logpdf(self, y):
        y = _as_nonneg(y)
        k, lam = self._params
        with np.errstate(divide="ignore"):
            return (
                k * math.log(lam)
                + special.xlogy(k - 1.0, y)
                - lam * y
                - special.gammaln(k)
            )

    def cdf(self, y):
        y = _as_nonneg(y)
        return regularized_gamma(self.shape, self.rate * y)[0]

    def sf(self, y):
        y = _as_nonneg(y)
        return regularized_gamma(self.shape, self.rate * y)[1]

    def _draw(self, rng, n):
        return rng.gamma(self.shape, 1.0 / self.rate, size=n)


class LogLogistic(HeadwayModel):
    """Log-logistic headways with scale ``scale`` (alpha) and shape ``shape`` (beta).

    ``cdf(y) = 1 / (1 + (y/alpha)**-beta)``; alpha is the median. A finite
    mean needs ``beta > 1``, so smaller shapes are rejected.
    """

    family = Family.LOGLOGISTIC
    param_names = ("scale", "shape")

    def _validate(self):
        if self.shape <= 1.0:
            raise DomainError(f"log-logistic shape must exceed 1 for a finite mean, got {self.shape}")

    @property
    def scale(self) -> float:
        return self._params[0]

    @property
    def shape(self) -> float:
        return self._params[1]

    @property
    def mean(self) -> float:
        b = math.pi / self.shape
        return self.scale * b / math.sin(b)

    @property
    def var(self) -> float:
        if self.shape <= 2.0:
            return math.inf
        b = math.pi / self.shape
        return self.scale**2 * (2 * b / math.sin(2 * b) - b**2 / math.sin(b) ** 2)

    def _logz(self, y):
        with np.errstate(divide="ignore"):
            return np.log(y) - math.log(self.scale)

    def logpdf(self, y):
        y = _as_nonneg(y)
        a, b = self._params
        lz = self._logz(y)
        with np.errstate(invalid="ignore"):
            out = math.log(b) - math.log(a) + (b - 1.0) * lz - 2.0 * np.logaddexp(0.0, b * lz)
        # y = 0: density is 0 for b > 1
        return np.where(y == 0, -np.inf, out)[()]

    def cdf(self, y):
        y = _as_nonneg(y)
        return special.expit(self.shape * self._logz(y))

    def sf(self, y):
        y = _as_nonneg(y)
        return special.expit(-self.shape * self._logz(y))

    def logsf(self, y):
        y = _as_nonneg(y)
        return -np.logaddexp(0.0, self.shape * self._logz(y))

    def _draw(self, rng, n):
        u = rng.random(size=n)
        # inverse cdf, written via logit to keep the tails exact
        return self.scale * np.exp(special.logit(u) / self.shape)


_CLASSES = {
    Family.EXPONENTIAL: Exponential,
    Family.GAMMA: Gamma,
    Family.LOGLOGISTIC: LogLogistic,
}


def make_headway_model(family, params) -> HeadwayModel:
    """Build a model from a family name and a parameter sequence or mapping."""
    family = Family.parse(family)
    cls = _CLASSES[family]
    if isinstance(params, dict):
        try:
            params = [params[name] for name in cls.param_names]
        except KeyError as exc:
            raise DomainError(f"missing parameter {exc.args[0]!r} for {family.value}") from None
    return cls(*params)


def headway_eval(model: HeadwayModel, y):
    """Return ``(pdf, cdf)`` of the headway distribution at ``y``."""
    return model.pdf(y), model.cdf(y)


def sample_headways(model: HeadwayModel, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` i.i.d. headways.

    Parameters
    ----------
    model : HeadwayModel
    n : int
        Number of draws, at least 1.
    seed : int, SeedSequence or Generator, optional
        Fixed seeds give identical sequences.

    Returns
    -------
    ndarray
        Strictly positive headways in seconds.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    rng = np.random.default_rng(seed)
    draws = model._draw(rng, int(n))
    # gamma draws with k < 1 can underflow to 0.0
    return np.maximum(draws, np.finfo(float).tiny)
