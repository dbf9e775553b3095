"""Univariate GLMGA and generalized log-Moyal (GlogM) distributions.

GLMGA(sigma, a, b) is the GlogM(theta, sigma) law mixed over
theta ~ Gamma(a, rate=b). It is Pareto-type with tail index
``1/(2*sigma)`` and regularly varying at zero with index ``a/sigma``.
"""

from dataclasses import dataclass

import numpy as np
from scipy import special

from . import _optim
from .errors import DomainError, MomentUndefinedError, NonConvergenceError
from .specfun import beta_odds

__all__ = [
    "GlmgaParams",
    "GlogmParams",
    "GlmgaFit",
    "glmga_pdf",
    "glmga_logpdf",
    "glmga_cdf",
    "glmga_sf",
    "glmga_quantile",
    "glmga_sample",
    "glmga_mean_var",
    "glmga_fit",
    "glogm_pdf",
    "glogm_cdf",
]


@dataclass(frozen=True)
class GlmgaParams:
    sigma: float
    a: float
    b: float

    def __post_init__(self):
        if not (self.sigma > 0 and self.a > 0 and self.b > 0):
            raise DomainError(f"GLMGA parameters must be positive: {self}")

    @property
    def tail_index(self):
        """Pareto tail index ``1/(2 sigma)``."""
        return 1.0 / (2.0 * self.sigma)


@dataclass(frozen=True)
class GlogmParams:
    theta: float
    sigma: float

    def __post_init__(self):
        if not (self.theta > 0 and self.sigma > 0):
            raise DomainError(f"GlogM parameters must be positive: {self}")


def _positive(y):
    y = np.asarray(y, dtype=float)
    if np.any(~(y > 0)):
        raise DomainError("y must be strictly positive")
    return y


def _log_odds(y, sigma, b):
    # log(2b * y^(1/sigma)); the GLMGA cdf is I_{a,1/2}(expit(L))
    return np.log(2.0 * b) + np.log(y) / sigma


def glmga_logpdf(y, p):
    y = _positive(y)
    sigma, a, b = p.sigma, p.a, p.b
    logy = np.log(y)
    # log(y^(-1/sigma) + 2b) computed without overflow
    log_den = np.logaddexp(-logy / sigma, np.log(2.0 * b))
    return (a * np.log(2.0 * b) - np.log(sigma) - special.betaln(a, 0.5)
            - (0.5 / sigma + 1.0) * logy - (a + 0.5) * log_den)


def glmga_pdf(y, p):
    """Density of GLMGA(sigma, a, b) at ``y > 0``."""
    return np.exp(glmga_logpdf(y, p))


def glmga_cdf(y, p):
    """Distribution function ``1 - I_{1/2,a}(y^{-1/s} / (y^{-1/s} + 2b))``."""
    y = _positive(y)
    L = _log_odds(y, p.sigma, p.b)
    return special.betainc(p.a, 0.5, special.expit(L))


def glmga_sf(y, p):
    """Survival function, accurate deep in the right tail."""
    y = _positive(y)
    L = _log_odds(y, p.sigma, p.b)
    return special.betainc(0.5, p.a, special.expit(-L))


def glmga_quantile(q, p):
    """Quantile function ``(2b t(q; a))^{-sigma}`` with ``t`` the beta odds."""
    q = np.asarray(q, dtype=float)
    if np.any(~((q > 0) & (q < 1))):
        raise DomainError("quantile level must lie in (0, 1)")
    t, _, _ = beta_odds(q, p.a)
    return np.exp(-p.sigma * (np.log(2.0 * p.b) + np.log(t)))


def glmga_sample(p, n, seed=None):
    """Draw ``n`` variates by inversion."""
    rng = np.random.default_rng(seed)
    return glmga_quantile(rng.uniform(size=n), p)


def glmga_mean_var(p):
    """Mean and variance (``sigma < 1/2`` resp. ``sigma < 1/4`` required)."""
    s, a, b = p.sigma, p.a, p.b
    if s >= 0.5:
        raise MomentUndefinedError("mean requires sigma < 1/2")
    if s >= 0.25:
        raise MomentUndefinedError("variance requires sigma < 1/4")
    log_mean = (-s * np.log(2 * b) + special.betaln(0.5 - s, a + s) - special.betaln(0.5, a))
    mean = np.exp(log_mean)
    ratio = np.exp(special.betaln(a + 2 * s, a) + special.betaln(0.5 - 2 * s, 0.5)
                   - special.betaln(a + s, a + s) - special.betaln(0.5 - s, 0.5 - s))
    return float(mean), float(mean ** 2 * (ratio - 1.0))


def glmga_mean(p):
    """Mean alone, defined for ``sigma < 1/2``."""
    s, a, b = p.sigma, p.a, p.b
    if s >= 0.5:
        raise MomentUndefinedError("mean requires sigma < 1/2")
    return float(np.exp(-s * np.log(2 * b) + special.betaln(0.5 - s, a + s)
                        - special.betaln(0.5, a)))


@dataclass
class GlmgaFit:
    params: GlmgaParams
    se: tuple
    loglik: float
    aic: float
    bic: float
    n: int
    cov: np.ndarray
    trace: list

    def to_dict(self):
        return {
            "family": "glmga",
            "sigma": self.params.sigma,
            "a": self.params.a,
            "b": self.params.b,
            "se": {"sigma": self.se[0], "a": self.se[1], "b": self.se[2]},
            "loglik": self.loglik,
            "aic": self.aic,
            "bic": self.bic,
            "n": self.n,
        }


def _negloglik(theta, y):
    s, a, b = np.exp(theta)
    logy = np.log(y)
    log_den = np.logaddexp(-logy / s, np.log(2.0 * b))
    ll = (a * np.log(2.0 * b) - np.log(s) - special.betaln(a, 0.5)
          - (0.5 / s + 1.0) * logy - (a + 0.5) * log_den)
    total = -np.sum(ll)
    return total if np.isfinite(total) else np.inf


def _negloglik_grad(theta, y):
    s, a, b = np.exp(theta)
    logy = np.log(y)
    log2b = np.log(2.0 * b)
    log_den = np.logaddexp(-logy / s, log2b)
    # share of y^(-1/s) in (y^(-1/s) + 2b)
    w = np.exp(-logy / s - log_den)
    d_s = np.sum(-1.0 / s + 0.5 * logy / s ** 2 - (a + 0.5) * w * logy / s ** 2)
    d_a = np.sum(log2b - (special.psi(a) - special.psi(a + 0.5)) - log_den)
    d_b = np.sum(a / b - (a + 0.5) * (1.0 - w) / b)
    # chain rule to log-parameters, sign for minimisation
    return -np.array([d_s * s, d_a * a, d_b * b])


def _start(y):
    # tail index from the upper half of log-data via a Hill-type estimate
    ly = np.sort(np.log(y))
    k = max(5, len(ly) // 10)
    hill = np.mean(ly[-k:]) - ly[-k - 1]
    sigma = float(np.clip(hill / 2.0, 0.05, 5.0))
    med = float(np.median(y))
    # choose b so that the a=1 median roughly matches
    b = float(np.clip(0.5 * med ** (-1.0 / sigma) * 3.0, 1e-8, 1e8))
    return np.log([sigma, 1.0, b])


def glmga_fit(data, x0=None):
    """Maximum-likelihood fit on log-parameters with observed-information s.e."""
    y = np.asarray(data, dtype=float).ravel()
    if y.size < 10:
        raise DomainError("glmga_fit needs at least 10 observations")
    if np.any(~(y > 0)):
        raise DomainError("glmga_fit requires strictly positive data")
    starts = [np.log(x0)] if x0 is not None else [_start(y), np.log([1.0, 1.0, 1.0])]
    best = None
    trace = []
    for start in starts:
        try:
            res = _optim.minimize_restarts(lambda t: _negloglik(t, y), start,
                                           jac=lambda t: _negloglik_grad(t, y))
        except NonConvergenceError as exc:
            trace.extend(exc.trace)
            continue
        trace.extend(res.trace)
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise NonConvergenceError("GLMGA fit did not converge", trace)
    est = np.exp(best.x)
    # Hessian on the natural scale so s.e. refer to (sigma, a, b)
    nat = lambda v: _negloglik(np.log(np.maximum(v, 1e-300)), y)
    nat_grad = lambda v: _negloglik_grad(np.log(v), y) / v
    H = _optim.numeric_hessian(nat, est, grad=nat_grad)
    cov, _ = _optim.invert_hessian(H)
    se = tuple(float(v) for v in np.sqrt(np.abs(np.diag(cov))))
    ll = -float(best.fun)
    n = y.size
    return GlmgaFit(GlmgaParams(*map(float, est)), se, ll, -2 * ll + 6, -2 * ll + 3 * np.log(n),
                    n, cov, trace)


def glogm_pdf(y, p):
    """GlogM(theta, sigma) density."""
    y = _positive(y)
    th, s = p.theta, p.sigma
    logy = np.log(y)
    return np.exp(0.5 * np.log(th) - 0.5 * np.log(2 * np.pi) - np.log(s)
                  - (0.5 / s + 1.0) * logy - 0.5 * th * np.exp(-logy / s))


def glogm_cdf(y, p):
    """GlogM(theta, sigma) distribution function ``erfc(sqrt(theta/2) y^{-1/(2 sigma)})``."""
    y = _positive(y)
    return special.erfc(np.sqrt(p.theta / 2.0) * np.exp(-np.log(y) / (2 * p.sigma)))
