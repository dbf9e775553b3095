"""Covariate-driven copula regression and the mixed continuous/count likelihood.

The dependence parameter follows ``log(delta_i) = x_i' beta`` (Gumbel:
``log(delta_i - 1) = x_i' beta``). The survival MGL likelihood comes with
an analytic gradient; the other families use numerical derivatives.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import interpolate, special

from . import _optim
from .copula import _odds, _shape
from .errors import DimensionError, DomainError, NonConvergenceError, NonFiniteError
from .families import CopulaFamily, CopulaSpec, delta_from_linear
from .glmga import GlmgaParams, glmga_cdf, glmga_fit, glmga_logpdf
from .margins import (PseudoSample, SplicedMargin, spliced_cdf, spliced_fit,
                      spliced_pdf)
from .specfun import _dquantile_dshape

__all__ = [
    "ns_basis",
    "quantile_knots",
    "design_matrix",
    "loglik_surv_mgl_reg",
    "grad_surv_mgl_reg",
    "loglik_surv_mgl_ev_reg",
    "loglik_copula_reg",
    "RegressionFit",
    "fit_copula_reg",
    "mixed_loglik",
    "ifm_fit",
]


# -- design ------------------------------------------------------------------

def ns_basis(x, knots=(), boundary=None, intercept=True):
    """Natural cubic spline design matrix.

    Follows the construction of R's ``splines::ns``: cubic B-splines on
    the augmented knot sequence, projected onto the null space of the
    second-derivative constraints at the boundary knots. With
    ``intercept`` a column of ones is prepended, giving
    ``len(knots) + 2`` columns.
    """
    x = np.asarray(x, dtype=float).ravel()
    knots = np.sort(np.asarray(knots, dtype=float).ravel())
    lo, hi = (x.min(), x.max()) if boundary is None else boundary
    if not hi > lo:
        raise DomainError("boundary knots must differ")
    if np.any((knots <= lo) | (knots >= hi)) or np.any(np.diff(knots) <= 0):
        raise DomainError("interior knots must be distinct and strictly inside the boundary")
    t = np.concatenate([[lo] * 4, knots, [hi] * 4])
    nb = t.size - 4

    def design(z, nu=0):
        out = np.empty((np.size(z), nb))
        for j in range(nb):
            c = np.zeros(nb)
            c[j] = 1.0
            out[:, j] = interpolate.BSpline(t, c, 3, extrapolate=True)(z, nu)
        return out

    inside = np.clip(x, lo, hi)
    basis = design(inside)
    # linear continuation beyond the boundary knots
    below, above = x < lo, x > hi
    if np.any(below) or np.any(above):
        d1 = design(np.array([lo, hi]), 1)
        basis[below] += (x[below] - lo)[:, None] * d1[0]
        basis[above] += (x[above] - hi)[:, None] * d1[1]
    const = design(np.array([lo, hi]), 2)[:, 1:]
    q, _ = np.linalg.qr(const.T, mode="complete")
    out = basis[:, 1:] @ q[:, 2:]
    if intercept:
        out = np.column_stack([np.ones(x.size), out])
    return out


def quantile_knots(x, probs):
    """Interior knots at the given quantiles of ``x``."""
    return np.quantile(np.asarray(x, dtype=float), probs)


def design_matrix(X, n=None):
    """Validate a design matrix: finite, full column rank, ``n`` rows."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if n is not None and X.shape[0] != n:
        raise DimensionError(f"design has {X.shape[0]} rows, data has {n}")
    if not np.all(np.isfinite(X)):
        raise DomainError("design matrix has non-finite entries")
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise DomainError("design matrix is not of full column rank")
    return X


def _pseudo(pseudo):
    u = np.asarray(pseudo.values if isinstance(pseudo, PseudoSample) else pseudo, dtype=float)
    if u.ndim != 2 or u.shape[1] < 2:
        raise DimensionError("pseudo-observations must be an n x d matrix with d >= 2")
    if np.any(~((u > 0) & (u < 1))):
        raise DomainError("pseudo-observations must lie in (0, 1)")
    return u


def _first_bad(vals):
    return int(np.flatnonzero(~np.isfinite(vals))[0])


# -- survival MGL ------------------------------------------------------------

def _surv_terms(u, X, beta):
    eta = X @ np.asarray(beta, dtype=float)
    a = np.exp(-eta)
    x, y = _odds(u, a[:, None], reflect=True)
    return a, x, y


def _surv_rows(a, x, y):
    d = x.shape[1]
    with np.errstate(all="ignore"):
        return ((d - 1) * special.gammaln(a) + special.gammaln(a + d / 2)
                - d * special.gammaln(a + 0.5)
                - (a + 0.5) * np.sum(np.log(y), axis=1)
                - (a + d / 2) * np.log1p(np.sum(x / y, axis=1)))


def loglik_surv_mgl_reg(pseudo, X, beta):
    """Survival MGL pseudo log-likelihood with ``delta_i = exp(x_i' beta)``."""
    u = _pseudo(pseudo)
    X = np.asarray(X, dtype=float)
    a, x, y = _surv_terms(u, X, beta)
    rows = _surv_rows(a, x, y)
    if not np.all(np.isfinite(rows)):
        i = _first_bad(rows)
        raise NonFiniteError(f"non-finite log-likelihood term at row {i}", i)
    return float(np.sum(rows))


def grad_surv_mgl_reg(pseudo, X, beta):
    """Analytic gradient of :func:`loglik_surv_mgl_reg` in ``beta``.

    With ``x_ij`` the Beta(1/2, a_i) quantile behind each margin,
    ``y = 1 - x`` and ``g = dx/da``, the per-row derivative in ``a`` is
    ``(d-1) psi(a) + psi(a + d/2) - d psi(a + 1/2) - sum log y
    + (a + 1/2) sum g/y - log(1 + sum t) - (a + d/2) sum(g/y^2)/(1 + sum t)``
    and ``da/dbeta = -a x_i``.
    """
    u = _pseudo(pseudo)
    X = np.asarray(X, dtype=float)
    a, x, y = _surv_terms(u, X, beta)
    d = u.shape[1]
    g = _dquantile_dshape(x, y, a[:, None])
    total = 1.0 + np.sum(x / y, axis=1)
    dl_da = ((d - 1) * special.psi(a) + special.psi(a + d / 2) - d * special.psi(a + 0.5)
             - np.sum(np.log(y), axis=1) + (a + 0.5) * np.sum(g / y, axis=1)
             - np.log(total) - (a + d / 2) * np.sum(g / y ** 2, axis=1) / total)
    if not np.all(np.isfinite(dl_da)):
        i = _first_bad(dl_da)
        raise NonFiniteError(f"non-finite gradient term at row {i}", i)
    return X.T @ (-a * dl_da)


# -- other families ----------------------------------------------------------

def loglik_copula_reg(pseudo, X, beta, family):
    """Pseudo log-likelihood for any bivariate family with the family's link."""
    family = CopulaFamily(family)
    if family is CopulaFamily.SURV_MGL:
        return loglik_surv_mgl_reg(pseudo, X, beta)
    u = _pseudo(pseudo)
    if family in (CopulaFamily.SURV_MGL_EV, CopulaFamily.MGL_EV, CopulaFamily.GUMBEL) \
            and u.shape[1] != 2:
        raise DimensionError(f"{family.value} regression is bivariate")
    delta = delta_from_linear(np.asarray(X, dtype=float) @ np.asarray(beta, dtype=float), family)
    with np.errstate(all="ignore"):
        try:
            rows = CopulaSpec(family, delta).logpdf(u)
        except DomainError:
            rows = np.full(u.shape[0], np.nan)
    if not np.all(np.isfinite(rows)):
        i = _first_bad(rows)
        raise NonFiniteError(f"non-finite log-likelihood term at row {i}", i)
    return float(np.sum(rows))


def loglik_surv_mgl_ev_reg(pseudo, X, beta):
    """Survival MGL-EV pseudo log-likelihood (bivariate only)."""
    return loglik_copula_reg(pseudo, X, beta, CopulaFamily.SURV_MGL_EV)


# -- fitting -----------------------------------------------------------------

@dataclass
class RegressionFit:
    family: str
    beta: np.ndarray
    se: np.ndarray
    cov: np.ndarray
    loglik: float
    aic: float
    bic: float
    fitted_delta: np.ndarray
    n: int
    singular: bool = False
    trace: list = field(default_factory=list)

    def to_dict(self):
        return {
            "family": self.family,
            "beta": self.beta.tolist(),
            "se": self.se.tolist(),
            "cov": self.cov.tolist(),
            "loglik": self.loglik,
            "aic": self.aic,
            "bic": self.bic,
            "fitted_delta": self.fitted_delta.tolist(),
            "singular_hessian": self.singular,
        }


def _safe(fun):
    def wrapped(beta):
        try:
            return fun(beta)
        except (NonFiniteError, DomainError):
            return np.inf
    return wrapped


def _fit(negll, X, family, init, grad=None, n=None):
    k = X.shape[1]
    x0 = np.zeros(k) if init is None else np.asarray(init, dtype=float)
    if x0.size != k:
        raise DimensionError(f"init has {x0.size} entries, design has {k} columns")
    f = _safe(negll)
    jac = None
    if grad is not None:
        def jac(b):
            try:
                return grad(b)
            except (NonFiniteError, DomainError):
                return np.full(k, np.nan)
    else:
        jac = "3-point"
    res = _optim.minimize_restarts(f, x0, jac=jac)
    H = _optim.numeric_hessian(f, res.x, grad=grad)
    cov, singular = _optim.invert_hessian(H)
    ll = -float(res.fun)
    n = X.shape[0] if n is None else n
    beta = np.asarray(res.x, dtype=float)
    return RegressionFit(
        family=CopulaFamily(family).value, beta=beta,
        se=np.sqrt(np.abs(np.diag(cov))), cov=cov, loglik=ll,
        aic=-2 * ll + 2 * k, bic=-2 * ll + k * np.log(n),
        fitted_delta=delta_from_linear(X @ beta, family), n=n,
        singular=bool(singular), trace=res.trace)


def fit_copula_reg(pseudo, X, family=CopulaFamily.SURV_MGL, init=None):
    """Maximum-likelihood copula regression; ``init`` defaults to ``beta = 0``."""
    family = CopulaFamily(family)
    u = _pseudo(pseudo)
    X = design_matrix(X, u.shape[0])
    if family is CopulaFamily.SURV_MGL:
        return _fit(lambda b: -loglik_surv_mgl_reg(u, X, b), X, family, init,
                    grad=lambda b: -grad_surv_mgl_reg(u, X, b))
    if family is CopulaFamily.MGB2:
        raise DomainError("MGB2 regression is not supported")
    return _fit(lambda b: -loglik_copula_reg(u, X, b, family), X, family, init)


# -- mixed continuous / spliced-count likelihood ----------------------------

def _margin_cdf_pdf(y, m):
    if isinstance(m, GlmgaParams):
        return glmga_cdf(y, m), np.exp(glmga_logpdf(y, m))
    if isinstance(m, SplicedMargin):
        return spliced_cdf(y, m), spliced_pdf(y, m)
    raise DomainError(f"unsupported margin {type(m).__name__}")


def mixed_loglik_rows(y1, y2, m1, m2, family, delta):
    """Per-row log-likelihood of the continuous/spliced pair.

    Rows with ``y2`` at or below the count threshold use the h-function
    difference ``h(F2(y2) | F1(y1)) - h(F2(y2 - 1) | F1(y1))``; the rest use
    the copula density. A continuous second margin uses the density form
    everywhere.
    """
    y1 = np.asarray(y1, dtype=float).ravel()
    y2 = np.asarray(y2, dtype=float).ravel()
    if y1.size != y2.size:
        raise DimensionError("y1 and y2 differ in length")
    F1, f1 = _margin_cdf_pdf(y1, m1)
    F2, f2 = _margin_cdf_pdf(y2, m2)
    spec = CopulaSpec(family, delta)
    disc = (y2 <= m2.u) if isinstance(m2, SplicedMargin) else np.zeros(y1.size, bool)
    out = np.empty(y1.size)
    with np.errstate(all="ignore"):
        if np.any(~disc):
            dens = spec if np.ndim(delta) == 0 else CopulaSpec(family, np.asarray(delta)[~disc])
            out[~disc] = (np.log(f1[~disc]) + np.log(f2[~disc])
                          + dens.logpdf(np.column_stack([F1[~disc], F2[~disc]])))
        if np.any(disc):
            sub = spec if np.ndim(delta) == 0 else CopulaSpec(family, np.asarray(delta)[disc])
            prev = spliced_cdf(y2[disc] - 1.0, m2)
            upper = sub.h(F2[disc], F1[disc])
            lower = np.where(prev > 0, sub.h(np.maximum(prev, 1e-300), F1[disc]), 0.0)
            out[disc] = np.log(f1[disc]) + np.log(upper - lower)
    return out


def mixed_loglik(y1, y2, m1, m2, family, delta):
    """Joint log-likelihood of a continuous and a spliced (or continuous) margin."""
    rows = mixed_loglik_rows(y1, y2, m1, m2, family, delta)
    if not np.all(np.isfinite(rows)):
        i = _first_bad(rows)
        raise NonFiniteError(f"non-finite mixed likelihood term at row {i}", i)
    return float(np.sum(rows))


def ifm_fit(y1, y2, X=None, family=CopulaFamily.SURV_MGL, threshold=None,
            variance="quadratic", init=None):
    """Two-step inference functions for margins.

    Step one fits a GLMGA margin to ``y1`` and either a spliced margin
    (when ``threshold`` is given) or a GLMGA margin to ``y2``. Step two
    maximises :func:`mixed_loglik` over the copula regression
    coefficients with the margins held fixed. Returns
    ``((fit1, fit2), RegressionFit)``.
    """
    y1 = np.asarray(y1, dtype=float).ravel()
    y2 = np.asarray(y2, dtype=float).ravel()
    fit1 = glmga_fit(y1)
    fit2 = glmga_fit(y2) if threshold is None else spliced_fit(y2, threshold, variance)
    m1 = fit1.params
    m2 = fit2.params if threshold is None else fit2.margin
    X = design_matrix(np.ones((y1.size, 1)) if X is None else X, y1.size)
    family = CopulaFamily(family)

    def negll(beta):
        delta = delta_from_linear(X @ beta, family)
        return -mixed_loglik(y1, y2, m1, m2, family, delta)

    if init is None:
        init = np.zeros(X.shape[1])
        if family is CopulaFamily.GUMBEL:
            init[0] = -1.0
    fit = _fit(negll, X, family, init)
    return (fit1, fit2), fit
