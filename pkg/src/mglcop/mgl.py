"""Multivariate GLMGA (MGL) distribution.

Coordinates are conditionally independent GlogM(theta/b_j, sigma_j) given
a shared theta ~ Gamma(a, 1). Margins are GLMGA(sigma_j, a, b_j) and the
family is closed under conditioning.
"""

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DimensionError, DomainError, MomentUndefinedError
from .glmga import GlmgaParams, glmga_quantile

__all__ = [
    "MglParams",
    "mgl_pdf",
    "mgl_logpdf",
    "mgl_moments",
    "mgl_conditional",
    "mgl_sample",
    "mgl_density_grid",
]


@dataclass(frozen=True)
class MglParams:
    sigma: tuple
    a: float
    b: tuple

    def __post_init__(self):
        sigma = tuple(float(s) for s in np.atleast_1d(self.sigma))
        b = tuple(float(v) for v in np.atleast_1d(self.b))
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "b", b)
        if len(sigma) != len(b) or len(sigma) < 1:
            raise DimensionError("sigma and b must have the same length d >= 1")
        if not (self.a > 0 and all(s > 0 for s in sigma) and all(v > 0 for v in b)):
            raise DomainError(f"MGL parameters must be positive: {self}")

    @property
    def d(self):
        return len(self.sigma)

    def margin(self, j):
        return GlmgaParams(self.sigma[j], self.a, self.b[j])


def _scaled(y, p):
    """``log s_j`` with ``s_j = y_j^{-1/sigma_j} / (2 b_j)``."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != p.d:
        raise DimensionError(f"expected last dimension {p.d}, got {y.shape[-1]}")
    if np.any(~(y > 0)):
        raise DomainError("MGL support is the positive orthant")
    sigma = np.asarray(p.sigma)
    b = np.asarray(p.b)
    return y, -np.log(y) / sigma - np.log(2 * b)


def mgl_logpdf(y, p):
    y, log_s = _scaled(y, p)
    d = p.d
    a = p.a
    sigma = np.asarray(p.sigma)
    # log(1 + sum_j s_j), stable for large s_j
    log_total = np.logaddexp.reduce(np.concatenate(
        [np.zeros(log_s.shape[:-1] + (1,)), log_s], axis=-1), axis=-1)
    return (special.gammaln(a + d / 2) - special.gammaln(a) - d * special.gammaln(0.5)
            - np.sum(np.log(sigma) + np.log(y), axis=-1)
            + 0.5 * np.sum(log_s, axis=-1)
            - (a + d / 2) * log_total)


def mgl_pdf(y, p):
    """Joint MGL density; rows of ``y`` are points in ``(0, inf)^d``."""
    return np.exp(mgl_logpdf(y, p))


def mgl_moments(p):
    """Mean vector, covariance and correlation matrices (``max sigma < 1/4``)."""
    sigma = np.asarray(p.sigma)
    b = np.asarray(p.b)
    a = p.a
    if np.max(sigma) >= 0.25:
        raise MomentUndefinedError("second moments require max(sigma) < 1/4")
    mean = np.exp(-sigma * np.log(2 * b) + special.betaln(0.5 - sigma, a + sigma)
                  - special.betaln(0.5, a))
    sj, sk = np.meshgrid(sigma, sigma, indexing="ij")
    # cross ratio E[theta^(sj+sk)] / (E[theta^sj] E[theta^sk])
    cross = np.exp(special.betaln(a + sj + sk, a) - special.betaln(a + sj, a + sk)) - 1.0
    own = (np.exp(special.betaln(a + 2 * sigma, a) + special.betaln(0.5 - 2 * sigma, 0.5)
                  - special.betaln(a + sigma, a + sigma)
                  - special.betaln(0.5 - sigma, 0.5 - sigma)) - 1.0)
    cov = np.outer(mean, mean) * cross
    np.fill_diagonal(cov, mean ** 2 * own)
    sd = np.sqrt(np.diag(cov))
    corr = cov / np.outer(sd, sd)
    np.fill_diagonal(corr, 1.0)
    return mean, cov, corr


def mgl_conditional(p, observed):
    """Law of the unobserved coordinates given ``observed = {index: value}``.

    Returns ``(params, free_indices)``. Every conditioned coordinate
    contributes ``y_k^{-1/sigma_k}/(2 b_k)`` to the common factor that
    rescales each remaining ``b_j``; ``a`` grows by one half per
    conditioned coordinate.
    """
    observed = dict(observed)
    for k, v in observed.items():
        if not 0 <= k < p.d:
            raise DimensionError(f"index {k} out of range for d={p.d}")
        if not v > 0:
            raise DomainError("observed values must be positive")
    free = [j for j in range(p.d) if j not in observed]
    if not free:
        raise DimensionError("conditioning set must be a proper subset")
    if not observed:
        return p, free
    shift = sum(v ** (-1.0 / p.sigma[k]) / (2 * p.b[k]) for k, v in observed.items())
    a_star = p.a + len(observed) / 2
    b_star = tuple(p.b[j] * (1.0 + shift) for j in free)
    return MglParams(tuple(p.sigma[j] for j in free), a_star, b_star), free


def mgl_sample(p, n, seed=None):
    """Sequential conditional sampling: ``n x d`` array of MGL draws."""
    if n < 1:
        raise DomainError("n must be at least 1")
    rng = np.random.default_rng(seed)
    u = rng.uniform(size=(n, p.d))
    out = np.empty((n, p.d))
    shift = np.zeros(n)
    for j in range(p.d):
        a_j = p.a + j / 2
        b_j = p.b[j] * (1.0 + shift)
        out[:, j] = glmga_quantile(u[:, j], GlmgaParams(p.sigma[j], a_j, 1.0)) * (b_j ** -p.sigma[j])
        shift = shift + out[:, j] ** (-1.0 / p.sigma[j]) / (2 * p.b[j])
    return out


def mgl_density_grid(p, q_lo=0.01, q_hi=0.99, size=100):
    """Gridded bivariate density for contour plotting (rows: y1, y2, pdf)."""
    if p.d != 2:
        raise DimensionError("density grid is bivariate")
    g1 = glmga_quantile(np.linspace(q_lo, q_hi, size), p.margin(0))
    g2 = glmga_quantile(np.linspace(q_lo, q_hi, size), p.margin(1))
    Y1, Y2 = np.meshgrid(g1, g2, indexing="ij")
    pts = np.stack([Y1.ravel(), Y2.ravel()], axis=1)
    return np.column_stack([pts, mgl_pdf(pts, p)])

