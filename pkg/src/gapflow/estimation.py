"""Maximum-likelihood fitting of gap and headway models.

Parameters are optimized on an unconstrained scale (logs of the positive
parameters; ``log(beta - 1)`` for the log-logistic shape) with L-BFGS-B and
finite-difference gradients from several starting points, followed by a few
Newton steps on a central-difference Hessian. The same Hessian gives Wald
standard errors. Superposed models are often over-parameterized, so the
observed information can be singular; such directions produce NaN t-values
and are reported as unidentified rather than raising.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize

from .distributions import Family, HeadwayModel, make_headway_model
from .errors import DomainError, FitError, NumericError
from .superposition import SuperposedGapModel

__all__ = [
    "OptimizerOptions",
    "FitReport",
    "loglik_gaps",
    "loglik_headways",
    "fit_gaps",
    "fit_headways",
    "select_L",
    "build_model_from_headway_fits",
]

SCHEMA_VERSION = 1

# box on the unconstrained scale; keeps the line search away from overflow
_BOUNDS = {
    Family.EXPONENTIAL: [(-30.0, 10.0)],
    Family.GAMMA: [(-6.0, 7.0), (-30.0, 10.0)],
    Family.LOGLOGISTIC: [(-20.0, 20.0), (-8.0, 5.0)],
}
_PENALTY = 1e10
# eigenvalues of the observed information below this fraction of the largest
# are treated as flat directions of the likelihood
_NULL_RTOL = 1e-7
_LOADING_TOL = 1e-5


def _null_floor(vals, ll, h):
    # a second difference of the log-likelihood carries rounding noise of
    # order eps * |ll| / h**2; curvature below that cannot be told from zero
    noise = 100.0 * np.finfo(float).eps * max(abs(ll), 1.0) / h**2
    return max(_NULL_RTOL * max(np.abs(vals).max(), 1e-300), noise)


@dataclass
class OptimizerOptions:
    """Settings for :func:`fit_gaps`, :func:`fit_headways` and :func:`select_L`."""

    n_starts: int = 8
    jitter: float = 0.5
    maxiter: int = 2000
    ftol: float = 1e-8
    hessian_step: float = 1e-4
    newton_steps: int = 5
    seed: int = 0
    n_jobs: int = 1


# -- parameter transforms --------------------------------------------------


def _to_theta(family: Family, params: Sequence[float]) -> np.ndarray:
    p = np.asarray(params, dtype=float)
    if family is Family.LOGLOGISTIC:
        return np.array([math.log(p[0]), math.log(p[1] - 1.0)])
    return np.log(p)


def _from_theta(family: Family, theta: np.ndarray) -> np.ndarray:
    if family is Family.LOGLOGISTIC:
        return np.array([math.exp(theta[0]), 1.0 + math.exp(theta[1])])
    return np.exp(theta)


def _dparams_dtheta(family: Family, params: np.ndarray) -> np.ndarray:
    if family is Family.LOGLOGISTIC:
        return np.array([params[0], params[1] - 1.0])
    return params.copy()


def _models_from_theta(family, L, theta):
    p = family.n_params
    return [make_headway_model(family, _from_theta(family, theta[j * p:(j + 1) * p])) for j in range(L)]


# -- log-likelihoods -------------------------------------------------------


def _check_sample(values, what) -> np.ndarray:
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise DomainError(f"empty {what} sequence")
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{what} must be finite")
    if np.any(x <= 0):
        raise DomainError(f"{what} must be strictly positive; drop zeros before evaluating")
    return x


def _sum_logs(values) -> float:
    if np.any(np.isneginf(values)):
        return -math.inf
    return float(np.sum(values))


def loglik_gaps(model, gaps) -> float:
    """Sum of log gap densities; ``-inf`` if any gap has zero density."""
    g = _check_sample(gaps, "gaps")
    if isinstance(model, HeadwayModel):
        model = SuperposedGapModel([model])
    elif not isinstance(model, SuperposedGapModel):
        model = SuperposedGapModel(model)
    return _sum_logs(model.logpdf(g))


def loglik_headways(model: HeadwayModel, headways) -> float:
    """Sum of log headway densities for one lane."""
    h = _check_sample(headways, "headways")
    return _sum_logs(model.logpdf(h))


# -- report ----------------------------------------------------------------


@dataclass
class FitReport:
    """Outcome of one maximum-likelihood fit.

    ``estimates``, ``std_errors``, ``t_values`` and ``identified`` have shape
    ``(L, n_params_per_component)``. ``covariance`` is on the natural
    parameter scale, flattened component by component, and excludes flat
    directions of the likelihood.
    """

    family: Family
    L: int
    estimates: np.ndarray
    std_errors: np.ndarray
    t_values: np.ndarray
    identified: np.ndarray
    covariance: np.ndarray
    max_loglik: float
    n_obs: int
    converged: bool
    source: str = "gaps"
    n_dropped: int = 0
    optimizer: dict = field(default_factory=dict)

    @property
    def n_params(self) -> int:
        return self.L * self.family.n_params

    @property
    def aic(self) -> float:
        return 2.0 * self.n_params - 2.0 * self.max_loglik

    @property
    def param_names(self) -> tuple[str, ...]:
        return self.family.param_names

    @property
    def components(self) -> list[HeadwayModel]:
        return [make_headway_model(self.family, row) for row in self.estimates]

    @property
    def model(self) -> SuperposedGapModel:
        return SuperposedGapModel(self.components)

    def combination_se(self, weights) -> float:
        """Standard error of ``sum(weights * estimates)`` (delta method).

        Only linear combinations the data pin down have a meaningful value;
        for example the rate sum of superposed exponential components.
        """
        w = np.asarray(weights, dtype=float).ravel()
        if w.size != self.covariance.shape[0]:
            raise DomainError("weights must match the flattened estimates")
        var = float(w @ self.covariance @ w)
        return math.sqrt(var) if var > 0 else math.nan

    def summary(self) -> str:
        names = self.param_names
        lines = [
            f"family={self.family.value} L={self.L} n={self.n_obs} "
            f"loglik={self.max_loglik:.3f} AIC={self.aic:.3f} converged={self.converged}"
        ]
        for j in range(self.L):
            cells = []
            for i, name in enumerate(names):
                est, t = self.estimates[j, i], self.t_values[j, i]
                tag = "" if self.identified[j, i] else "*"
                cells.append(f"{name}={est:.3f} (t={t:.3f}){tag}")
            lines.append(f"  j={j + 1}: " + "  ".join(cells))
        if not self.identified.all():
            lines.append("  * not identified by the data")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        def clean(a):
            return [[None if not math.isfinite(v) else float(v) for v in row] for row in np.atleast_2d(a)]

        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "fit_report",
            "family": self.family.value,
            "L": self.L,
            "source": self.source,
            "param_names": list(self.param_names),
            "estimates": clean(self.estimates),
            "std_errors": clean(self.std_errors),
            "t_values": clean(self.t_values),
            "identified": self.identified.astype(bool).tolist(),
            "covariance": clean(self.covariance),
            "max_loglik": self.max_loglik,
            "aic": self.aic,
            "n_obs": self.n_obs,
            "n_dropped": self.n_dropped,
            "converged": self.converged,
            "optimizer": self.optimizer,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FitReport":
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise DomainError(f"unsupported fit report schema {doc.get('schema_version')!r}")

        def arr(key):
            return np.array([[math.nan if v is None else v for v in row] for row in doc[key]], dtype=float)

        return cls(
            family=Family.parse(doc["family"]),
            L=int(doc["L"]),
            estimates=arr("estimates"),
            std_errors=arr("std_errors"),
            t_values=arr("t_values"),
            identified=np.array(doc["identified"], dtype=bool),
            covariance=arr("covariance"),
            max_loglik=float(doc["max_loglik"]),
            n_obs=int(doc["n_obs"]),
            converged=bool(doc["converged"]),
            source=doc.get("source", "gaps"),
            n_dropped=int(doc.get("n_dropped", 0)),
            optimizer=dict(doc.get("optimizer", {})),
        )


# -- optimizer internals ---------------------------------------------------


def _moment_start(family: Family, L: int, data: np.ndarray, dominant: bool) -> np.ndarray:
    """Natural parameters for a moment-matched start, shape (L, p).

    The balanced start splits the flow evenly over the components. The
    dominant start gives the first component the whole sample and the others
    a thousandth of the flow, which is where nested models usually end up.
    """
    m = float(np.mean(data))
    v = float(np.var(data)) or m * m
    shares = np.full(L, 1.0 / L)
    if dominant and L > 1:
        shares = np.full(L, 1e-3)
        shares[0] = 1.0
    means = m / shares
    rows = []
    if family is Family.EXPONENTIAL:
        rows = [[1.0 / mu] for mu in means]
    elif family is Family.GAMMA:
        k = min(max(m * m / v, 0.05), 50.0)
        rows = [[k, k / mu] for mu in means]
    else:
        s = float(np.std(np.log(data))) or 1.0
        beta = min(max(math.pi / (s * math.sqrt(3.0)), 1.2), 50.0)
        b = math.pi / beta
        rows = [[mu * math.sin(b) / b, beta] for mu in means]
    return np.array(rows, dtype=float)


def _start_points(family, L, data, opts: OptimizerOptions, rng) -> list[np.ndarray]:
    balanced = _moment_start(family, L, data, dominant=False)
    points = [balanced]
    if L > 1:
        points.append(_moment_start(family, L, data, dominant=True))
    while len(points) < max(opts.n_starts, 1):
        jit = rng.uniform(1.0 - opts.jitter, 1.0 + opts.jitter, size=balanced.shape)
        start = balanced * jit
        if family is Family.LOGLOGISTIC:
            start[:, 1] = np.maximum(start[:, 1], 1.05)
        points.append(start)
    points = points[: max(opts.n_starts, 1)]
    thetas = []
    for pt in points:
        theta = np.concatenate([_to_theta(family, row) for row in pt])
        lo, hi = np.array(_bounds(family, L)).T
        thetas.append(np.clip(theta, lo + 1e-6, hi - 1e-6))
    return thetas


def _bounds(family, L):
    return _BOUNDS[family] * L


class _Objective:
    """Log-likelihood as a function of the unconstrained parameter vector."""

    def __init__(self, family, L, data, kind):
        self.family, self.L, self.data, self.kind = family, L, data, kind
        self.n = data.size
        self.nfev = 0

    def loglik(self, theta) -> float:
        self.nfev += 1
        try:
            comps = _models_from_theta(self.family, self.L, np.asarray(theta, dtype=float))
        except (DomainError, OverflowError):
            return -math.inf
        if self.kind == "headways":
            vals = comps[0].logpdf(self.data)
        else:
            vals = SuperposedGapModel(comps).logpdf(self.data)
        ll = _sum_logs(vals)
        return ll if not math.isnan(ll) else -math.inf

    def __call__(self, theta) -> float:
        ll = self.loglik(theta)
        return -ll / self.n if math.isfinite(ll) else _PENALTY


def _central_gradient(f, theta, h):
    g = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        g[i] = (f(theta + e) - f(theta - e)) / (2 * h)
    return g


def _central_hessian(f, theta, h):
    p = theta.size
    f0 = f(theta)
    H = np.empty((p, p))
    E = np.eye(p) * h
    fp = np.array([f(theta + E[i]) for i in range(p)])
    fm = np.array([f(theta - E[i]) for i in range(p)])
    for i in range(p):
        H[i, i] = (fp[i] - 2 * f0 + fm[i]) / h**2
        for j in range(i + 1, p):
            v = (
                f(theta + E[i] + E[j])
                - f(theta + E[i] - E[j])
                - f(theta - E[i] + E[j])
                + f(theta - E[i] - E[j])
            ) / (4 * h * h)
            H[i, j] = H[j, i] = v
    return H, fp, fm, f0


def _projected(grad, theta, lo, hi, tol=1e-6):
    # an ascent direction pointing out of the box does not count
    g = grad.copy()
    g[(theta <= lo + tol) & (g < 0)] = 0.0
    g[(theta >= hi - tol) & (g > 0)] = 0.0
    return g


def _newton_polish(obj, theta, lo, hi, opts):
    ll = obj.loglik(theta)
    for _ in range(opts.newton_steps):
        H, fp, fm, f0 = _central_hessian(obj.loglik, theta, opts.hessian_step)
        grad = (fp - fm) / (2 * opts.hessian_step)
        if not np.all(np.isfinite(H)) or not np.all(np.isfinite(grad)):
            break
        vals, vecs = np.linalg.eigh(-H)
        keep = vals > _null_floor(vals, ll, opts.hessian_step)
        if not keep.any():
            break
        step = vecs[:, keep] @ ((vecs[:, keep].T @ grad) / vals[keep])
        improved = False
        for scale in (1.0, 0.5, 0.25):
            cand = np.clip(theta + scale * step, lo, hi)
            cll = obj.loglik(cand)
            if cll > ll:
                theta, ll, improved = cand, cll, True
                break
        if not improved or abs(step).max() < 1e-10:
            break
    return theta, ll


def _information(obj, theta, h):
    H, fp, fm, _ = _central_hessian(obj.loglik, theta, h)
    grad = (fp - fm) / (2 * h)
    return -H, grad


def _run_fit(data, family, L, opts: OptimizerOptions, kind: str, n_dropped: int, seed_key) -> FitReport:
    family = Family.parse(family)
    p = family.n_params * L
    n = data.size
    if p >= n:
        raise DomainError(f"{p} free parameters need more than {n} observations")
    if n < 10 * p:
        warnings.warn(f"only {n} observations for {p} parameters; estimates may be unstable", stacklevel=3)

    obj = _Objective(family, L, data, kind)
    lo, hi = np.array(_bounds(family, L)).T
    rng = np.random.default_rng(np.random.SeedSequence([opts.seed, *seed_key]))
    starts = _start_points(family, L, data, opts, rng)

    runs = []
    for i, theta0 in enumerate(starts):
        res = optimize.minimize(
            obj,
            theta0,
            method="L-BFGS-B",
            bounds=list(zip(lo, hi)),
            options={"maxiter": opts.maxiter, "ftol": opts.ftol, "gtol": 1e-9},
        )
        runs.append((i, res))

    def score(run):
        return -run[1].fun

    best_i, best = max(runs, key=score)
    if best.fun >= _PENALTY:
        raise FitError("every start produced a zero likelihood")

    theta, ll = _newton_polish(obj, np.asarray(best.x, dtype=float), lo, hi, opts)
    info, grad = _information(obj, theta, opts.hessian_step)
    grad = _projected(grad, theta, lo, hi)
    grad_max = float(np.max(np.abs(grad)))

    report = _assemble(family, L, theta, ll, info, n, kind, n_dropped, opts.hessian_step)
    report.optimizer = {
        "method": "L-BFGS-B + Newton polish",
        "n_starts": len(starts),
        "best_start": best_i,
        "nfev": obj.nfev,
        "grad_max": grad_max,
        "starts": [
            {
                "loglik": None if r.fun >= _PENALTY else -float(r.fun) * n,
                "nit": int(r.nit),
                "success": bool(r.success),
                "message": str(r.message),
            }
            for _, r in runs
        ],
    }
    converged = any(r.success for _, r in runs) or grad_max < 1e-4 * max(abs(ll), 1.0)
    report.converged = bool(converged and math.isfinite(ll))
    if not report.converged:
        raise FitError(f"no start converged for family={family.value} L={L}", best=report)
    return report


def _assemble(family, L, theta, ll, info, n, kind, n_dropped, h) -> FitReport:
    pcomp = family.n_params
    params = np.concatenate([_from_theta(family, theta[j * pcomp:(j + 1) * pcomp]) for j in range(L)])
    jac = np.concatenate(
        [_dparams_dtheta(family, params[j * pcomp:(j + 1) * pcomp]) for j in range(L)]
    )
    P = theta.size
    if np.all(np.isfinite(info)):
        info = 0.5 * (info + info.T)
        vals, vecs = np.linalg.eigh(info)
        try:
            cov_full = np.linalg.pinv(info, hermitian=True)
            var_theta = np.diag(cov_full).copy()
        except np.linalg.LinAlgError:
            var_theta = np.full(P, math.nan)
        null = vals <= _null_floor(vals, ll, h)
        loading = np.sqrt((vecs[:, null] ** 2).sum(axis=1)) if null.any() else np.zeros(P)
        keep = ~null
        cov_trunc = (vecs[:, keep] / vals[keep]) @ vecs[:, keep].T
    else:
        var_theta = np.full(P, math.nan)
        loading = np.ones(P)
        cov_trunc = np.full((P, P), math.nan)

    with np.errstate(invalid="ignore"):
        se_theta = np.where(var_theta > 0, np.sqrt(np.where(var_theta > 0, var_theta, 0.0)), math.nan)
    se = jac * se_theta
    t = params / se
    identified = (loading < _LOADING_TOL) & np.isfinite(t)
    cov_nat = cov_trunc * np.outer(jac, jac)

    shape = (L, pcomp)
    return FitReport(
        family=family,
        L=L,
        estimates=params.reshape(shape),
        std_errors=se.reshape(shape),
        t_values=t.reshape(shape),
        identified=identified.reshape(shape),
        covariance=cov_nat,
        max_loglik=float(ll),
        n_obs=int(n),
        converged=True,
        source=kind,
        n_dropped=int(n_dropped),
    )


def _prepare(values, what):
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise DomainError(f"empty {what} sequence")
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise DomainError(f"{what} must be finite and nonnegative")
    zero = x == 0
    return x[~zero], int(zero.sum())


# -- public API ------------------------------------------------------------


def fit_gaps(gaps, family="gamma", L: int = 1, options: OptimizerOptions | None = None) -> FitReport:
    """Fit an ``L``-component superposed gap model by maximum likelihood.

    Parameters
    ----------
    gaps : array_like
        Observed gaps in seconds. Zero gaps (simultaneous crossings at the
        recording resolution) are dropped and counted in ``n_dropped``.
    family : str or Family
        Headway family shared by all components.
    L : int
        Number of superposed renewal components.
    options : OptimizerOptions, optional

    Returns
    -------
    FitReport

    Raises
    ------
    DomainError
        If there are no more observations than free parameters.
    FitError
        If no start converges; ``err.best`` holds the best point found.
    """
    opts = options or OptimizerOptions()
    if int(L) != L or L < 1:
        raise DomainError(f"L must be a positive integer, got {L!r}")
    data, dropped = _prepare(gaps, "gaps")
    return _run_fit(data, family, int(L), opts, "gaps", dropped, (int(L),))


def fit_headways(headways, family="gamma", options: OptimizerOptions | None = None) -> FitReport:
    """Fit a single lane's headway distribution by maximum likelihood."""
    opts = options or OptimizerOptions()
    data, dropped = _prepare(headways, "headways")
    return _run_fit(data, family, 1, opts, "headways", dropped, (1,))


def select_L(gaps, family="gamma", L_range: Iterable[int] = range(1, 6), options: OptimizerOptions | None = None):
    """Fit every ``L`` in ``L_range`` and pick the one with the smallest AIC.

    Returns
    -------
    best : FitReport
    table : dict
        Maps each ``L`` to its FitReport, or to the exception raised when
        that fit failed. Failed fits are excluded from the choice.
    """
    opts = options or OptimizerOptions()
    Ls = sorted({int(v) for v in L_range})
    if not Ls:
        raise DomainError("L_range is empty")

    def one(L):
        try:
            return L, fit_gaps(gaps, family, L, opts)
        except (FitError, NumericError, DomainError) as exc:
            return L, exc

    if opts.n_jobs > 1 and len(Ls) > 1:
        with ThreadPoolExecutor(max_workers=opts.n_jobs) as pool:
            results = list(pool.map(one, Ls))
    else:
        results = [one(L) for L in Ls]
    table = dict(results)
    ok = [r for r in table.values() if isinstance(r, FitReport)]
    if not ok:
        raise FitError("every L in the range failed to fit")
    best = min(ok, key=lambda r: (r.aic, r.L))
    return best, table


def build_model_from_headway_fits(reports: Sequence[FitReport]) -> SuperposedGapModel:
    """Superpose one fitted headway model per lane."""
    reports = list(reports)
    if not reports:
        raise DomainError("at least one headway fit is required")
    comps = []
    for r in reports:
        if r.L != 1:
            raise DomainError("headway fits must have L = 1")
        comps.extend(r.components)
    return SuperposedGapModel(comps)
