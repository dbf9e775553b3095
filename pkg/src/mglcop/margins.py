"""Marginal models and transforms feeding the copula layer.

Pseudo-observations (ranks, Gaussian-kernel cdf), a spliced model with a
right-truncated negative binomial body and a generalized Pareto tail,
randomized quantile residuals and parametric-bootstrap goodness of fit.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special, stats

from . import _optim
from .errors import DimensionError, DomainError, NonConvergenceError

__all__ = [
    "PseudoSample",
    "rank_pseudo_obs",
    "kernel_pseudo_obs",
    "SplicedMargin",
    "SplicedFit",
    "spliced_pdf",
    "spliced_cdf",
    "spliced_quantile",
    "spliced_sample",
    "spliced_fit",
    "truncated_nb_pmf",
    "truncated_nb_cdf",
    "quantile_residuals",
    "gof_statistics",
    "gof_tests",
]

_EDGE = 1e-10
METHODS = ("rank", "kernel", "parametric")


@dataclass(frozen=True)
class PseudoSample:
    """``n x d`` matrix of values strictly inside the unit cube, with provenance."""

    values: np.ndarray
    method: str

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise DimensionError("pseudo-observations must form an n x d matrix")
        if np.any(~((v > 0) & (v < 1))):
            raise DomainError("pseudo-observations must lie strictly inside (0, 1)")
        if self.method not in METHODS:
            raise DomainError(f"method must be one of {METHODS}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __getitem__(self, key):
        return self.values[key]

    def __len__(self):
        return self.values.shape[0]

    @property
    def shape(self):
        return self.values.shape


def _matrix(data):
    y = np.asarray(data, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2 or y.shape[0] < 2:
        raise DimensionError("need an n x d data matrix with n >= 2")
    return y


def rank_pseudo_obs(data):
    """``rank / (n + 1)`` per column, ties sharing their average rank."""
    y = _matrix(data)
    n = y.shape[0]
    return PseudoSample(stats.rankdata(y, axis=0) / (n + 1), "rank")


def kernel_pseudo_obs(data, bandwidth=0.2):
    """Gaussian-kernel smoothed empirical cdf evaluated at each observation.

    Apply to log data for heavy-tailed losses; the bandwidth is on the
    scale of whatever is passed in.
    """
    if not bandwidth > 0:
        raise DomainError("bandwidth must be positive")
    y = _matrix(data)
    out = np.empty_like(y)
    for j in range(y.shape[1]):
        col = y[:, j]
        out[:, j] = special.ndtr((col[:, None] - col[None, :]) / bandwidth).mean(axis=1)
    return PseudoSample(np.clip(out, _EDGE, 1 - _EDGE), "kernel")


# -- spliced count/GP model --------------------------------------------------

def _nb(lam, phi, variance):
    if variance == "quadratic":
        # var = lam + phi lam^2
        r = 1.0 / phi
        return stats.nbinom(r, r / (r + lam))
    if variance == "linear":
        # var = lam (1 + phi), the gamlss NBII form
        return stats.nbinom(lam / phi, 1.0 / (1.0 + phi))
    raise DomainError("variance must be 'quadratic' or 'linear'")


def truncated_nb_pmf(k, lam, phi, u, variance="quadratic"):
    """Negative binomial pmf renormalised on ``{0, ..., u}``."""
    dist = _nb(lam, phi, variance)
    k = np.asarray(k)
    inside = (k >= 0) & (k <= u)
    return np.where(inside, dist.pmf(k) / dist.cdf(u), 0.0)


def truncated_nb_cdf(k, lam, phi, u, variance="quadratic"):
    dist = _nb(lam, phi, variance)
    k = np.floor(np.asarray(k, dtype=float))
    return np.clip(np.where(k < 0, 0.0, dist.cdf(np.minimum(k, u)) / dist.cdf(u)), 0.0, 1.0)


@dataclass(frozen=True)
class SplicedMargin:
    """Weight ``w`` on the truncated count body at or below ``u``, GP tail above.

    The tail is generalized Pareto with location ``u``, shape ``shape`` and
    scale ``scale``; ``variance`` selects the negative binomial form.
    """

    w: float
    u: int
    lam: float
    phi: float
    shape: float
    scale: float
    variance: str = "quadratic"

    def __post_init__(self):
        if not 0 < self.w < 1:
            raise DomainError("splice weight must lie in (0, 1)")
        if not (self.lam > 0 and self.phi > 0 and self.scale > 0 and self.u >= 0):
            raise DomainError(f"invalid spliced margin: {self}")
        _nb(self.lam, self.phi, self.variance)

    @property
    def tail(self):
        return stats.genpareto(self.shape, loc=self.u, scale=self.scale)

    def to_dict(self):
        return {"w": self.w, "u": self.u, "lambda": self.lam, "phi": self.phi,
                "gp_location": self.u, "gp_shape": self.shape, "gp_scale": self.scale,
                "variance": self.variance}


def spliced_pdf(y, m):
    """Mixed density: ``w f_d(y)`` on integers ``<= u``, ``(1 - w) f_c(y)`` above."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("spliced margin has support on y >= 0")
    body = m.w * truncated_nb_pmf(np.where(y == np.floor(y), y, -1), m.lam, m.phi, m.u,
                                  m.variance)
    tail = (1.0 - m.w) * m.tail.pdf(y)
    return np.where(y <= m.u, body, tail)


def spliced_cdf(y, m):
    y = np.asarray(y, dtype=float)
    body = m.w * truncated_nb_cdf(y, m.lam, m.phi, m.u, m.variance)
    tail = m.w + (1.0 - m.w) * m.tail.cdf(y)
    return np.where(y <= m.u, body, tail)


def spliced_quantile(q, m):
    """Generalized inverse of :func:`spliced_cdf`."""
    q = np.asarray(q, dtype=float)
    if np.any(~((q >= 0) & (q < 1))):
        raise DomainError("quantile level must lie in [0, 1)")
    ks = np.arange(m.u + 1)
    body_cdf = m.w * truncated_nb_cdf(ks, m.lam, m.phi, m.u, m.variance)
    body = ks[np.minimum(np.searchsorted(body_cdf, q, side="left"), m.u)]
    with np.errstate(invalid="ignore"):
        tail = m.tail.ppf(np.clip((q - m.w) / (1.0 - m.w), 0.0, 1.0))
    return np.where(q <= m.w, body, tail)


def spliced_sample(m, n, seed=None):
    rng = np.random.default_rng(seed)
    return spliced_quantile(rng.uniform(size=n), m)


@dataclass
class SplicedFit:
    margin: SplicedMargin
    se: dict
    loglik: float
    n: int
    n_exceed: int
    trace: list = field(default_factory=list)

    def to_dict(self):
        return {**self.margin.to_dict(), "se": self.se, "loglik": self.loglik,
                "n": self.n, "n_exceed": self.n_exceed}


def _nb_negloglik(theta, k, u, variance):
    lam, phi = np.exp(theta)
    dist = _nb(lam, phi, variance)
    with np.errstate(all="ignore"):
        val = -(np.sum(dist.logpmf(k)) - k.size * dist.logcdf(u))
    return val if np.isfinite(val) else np.inf


def spliced_fit(data, u, variance="quadratic"):
    """Fit the spliced model with threshold ``u``.

    The weight is fixed at ``(n - n_c)/n`` with ``n_c`` the exceedance
    count; the body is fitted by truncated ML and the tail by GP ML with
    its location pinned at ``u``.
    """
    y = np.asarray(data, dtype=float).ravel()
    if np.any(y < 0):
        raise DomainError("spliced_fit needs nonnegative data")
    body = y[y <= u]
    tail = y[y > u]
    if body.size == 0 or tail.size == 0:
        raise DomainError("both sides of the threshold need observations")
    if np.any(body != np.floor(body)):
        raise DomainError("observations at or below the threshold must be integers")
    n = y.size
    w = (n - tail.size) / n
    k = body.astype(int)
    mean = body.mean()
    var = max(body.var(), mean * 1.01)
    phi0 = (var - mean) / mean ** 2 if variance == "quadratic" else var / mean - 1.0
    x0 = np.log([max(mean, 0.5), max(phi0, 0.05)])
    fun = lambda t: _nb_negloglik(t, k, u, variance)
    res = _optim.minimize_restarts(fun, x0)
    lam, phi = np.exp(res.x)
    H = _optim.numeric_hessian(lambda v: _nb_negloglik(np.log(v), k, u, variance),
                               np.array([lam, phi]))
    cov_nb, _ = _optim.invert_hessian(H)
    shape, _, scale = stats.genpareto.fit(tail, floc=u)
    gp_nll = lambda v: -np.sum(stats.genpareto.logpdf(tail, v[0], loc=u, scale=v[1]))
    cov_gp, _ = _optim.invert_hessian(_optim.numeric_hessian(gp_nll, np.array([shape, scale])))
    margin = SplicedMargin(w, int(u), float(lam), float(phi), float(shape), float(scale),
                           variance)
    se = {"lambda": float(np.sqrt(abs(cov_nb[0, 0]))), "phi": float(np.sqrt(abs(cov_nb[1, 1]))),
          "gp_shape": float(np.sqrt(abs(cov_gp[0, 0]))),
          "gp_scale": float(np.sqrt(abs(cov_gp[1, 1])))}
    ll = float(np.sum(np.log(spliced_pdf(y, margin))))
    return SplicedFit(margin, se, ll, n, int(tail.size), res.trace)


def quantile_residuals(data, m, seed=None):
    """Randomized normal quantile residuals ``(body, tail)``.

    Tail observations give ``Phi^{-1}(F_c(y))``; body observations draw a
    uniform point inside the jump ``(F_d(y - 1), F_d(y)]`` of the truncated
    count cdf before the normal transform.
    """
    y = np.asarray(data, dtype=float).ravel()
    rng = np.random.default_rng(seed)
    body = y[y <= m.u]
    tail = y[y > m.u]
    lo = truncated_nb_cdf(body - 1, m.lam, m.phi, m.u, m.variance)
    hi = truncated_nb_cdf(body, m.lam, m.phi, m.u, m.variance)
    v = lo + rng.uniform(size=body.size) * (hi - lo)
    r_body = special.ndtri(np.clip(v, _EDGE, 1 - _EDGE))
    r_tail = special.ndtri(np.clip(m.tail.cdf(tail), _EDGE, 1 - _EDGE))
    return r_body, r_tail


# -- goodness of fit ---------------------------------------------------------

def gof_statistics(data, cdf):
    """Kolmogorov-Smirnov, Cramer-von Mises and Anderson-Darling statistics."""
    x = np.sort(np.asarray(data, dtype=float).ravel())
    n = x.size
    z = np.clip(np.asarray(cdf(x), dtype=float), _EDGE, 1 - _EDGE)
    i = np.arange(1, n + 1)
    ks = max(np.max(i / n - z), np.max(z - (i - 1) / n))
    cvm = 1.0 / (12 * n) + np.sum(((2 * i - 1) / (2 * n) - z) ** 2)
    ad = -n - np.mean((2 * i - 1) * (np.log(z) + np.log1p(-z[::-1])))
    return {"KS": float(ks), "CvM": float(cvm), "AD": float(ad)}


def gof_tests(data, cdf, fit, sample, n_boot=999, seed=None, max_fail=0.10):
    """Statistics on the fitted model with parametric-bootstrap p-values.

    ``fit(data) -> params``, ``cdf(x, params) -> F(x)`` and
    ``sample(params, n, rng) -> draws``. Every replicate is simulated from
    the fitted parameters and refitted. Replicates use independent seed
    streams spawned from ``seed``, so results do not depend on execution
    order. Raises :class:`NonConvergenceError` when more than ``max_fail``
    of the refits fail.
    """
    x = np.asarray(data, dtype=float).ravel()
    if x.size < 10:
        raise DomainError("gof_tests needs at least 10 observations")
    if n_boot < 99:
        raise DomainError("n_boot must be at least 99")
    params = fit(x)
    observed = gof_statistics(x, lambda v: cdf(v, params))
    boot = {key: [] for key in observed}
    failures = 0
    for child in np.random.SeedSequence(seed).spawn(n_boot):
        rng = np.random.default_rng(child)
        sim = sample(params, x.size, rng)
        try:
            p_sim = fit(sim)
        except (NonConvergenceError, DomainError, ArithmeticError, optimize.OptimizeWarning):
            failures += 1
            continue
        for key, val in gof_statistics(sim, lambda v: cdf(v, p_sim)).items():
            boot[key].append(val)
    if failures > max_fail * n_boot:
        raise NonConvergenceError(f"{failures} of {n_boot} bootstrap refits failed",
                                  [{"failures": failures}])
    out = {"n": int(x.size), "n_boot": int(n_boot), "refit_failures": failures}
    for key, val in observed.items():
        arr = np.asarray(boot[key])
        out[key] = val
        out[f"{key}_p"] = float((1 + np.sum(arr >= val)) / (arr.size + 1))
    return out
