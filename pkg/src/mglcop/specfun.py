"""Special functions used throughout the package.

Thin, validated wrappers over :mod:`scipy.special` plus the pieces scipy
does not provide: a complement-accurate beta quantile pair, the
``x/(1-x)`` beta-odds transform and the derivative of the beta quantile
with respect to its second shape parameter.
"""

from typing import NamedTuple

import numpy as np
from scipy import special

from .errors import DomainError

__all__ = [
    "BetaShape",
    "erfc",
    "log_gamma",
    "digamma",
    "inc_beta",
    "inv_inc_beta",
    "inv_inc_beta_pair",
    "beta_odds",
    "d_inv_inc_beta_dshape",
]


class BetaShape(NamedTuple):
    """Shape pair ``(m, n)`` of a regularized incomplete beta function."""

    m: float
    n: float

    def validate(self):
        if not (self.m > 0 and self.n > 0):
            raise DomainError(f"beta shapes must be positive, got {self!r}")
        return self


def _shape(m, n):
    m = np.asarray(m, dtype=float)
    n = np.asarray(n, dtype=float)
    if np.any(~(m > 0)) or np.any(~(n > 0)):
        raise DomainError("beta shapes must be positive")
    return m, n


def _unit(x, name="x"):
    x = np.asarray(x, dtype=float)
    if np.any(~((x >= 0) & (x <= 1))):
        raise DomainError(f"{name} must lie in [0, 1]")
    return x


def erfc(x):
    """Complementary error function ``2/sqrt(pi) * int_x^inf exp(-t^2) dt``."""
    return special.erfc(x)


def log_gamma(x):
    """Natural log of the gamma function for ``x > 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("log_gamma requires x > 0")
    return special.gammaln(x)


def digamma(x):
    """Derivative of :func:`log_gamma`."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("digamma requires x > 0")
    return special.psi(x)


def inc_beta(x, m, n):
    """Regularized incomplete beta function ``I_{m,n}(x)``."""
    x = _unit(x)
    m, n = _shape(m, n)
    return special.betainc(m, n, x)


def _log_beta_pdf(x, y, m, n):
    # y = 1 - x, passed separately so it keeps full relative precision
    with np.errstate(divide="ignore"):
        return (m - 1) * np.log(x) + (n - 1) * np.log(y) - special.betaln(m, n)


def inv_inc_beta_pair(p, m, n):
    """Return ``(x, 1 - x)`` with ``I_{m,n}(x) = p``.

    Each member is computed from whichever of ``I^{-1}_{m,n}(p)`` and
    ``I^{-1}_{n,m}(1 - p)`` is the smaller number, so both keep full
    relative precision when ``x`` sits next to 0 or 1.
    """
    p = _unit(p, "p")
    m, n = _shape(m, n)
    p, m, n = np.broadcast_arrays(p, m, n)
    x = special.betaincinv(m, n, p)
    y = special.betaincinv(n, m, 1.0 - p)
    use_y = x > 0.5
    x_out = np.where(use_y, 1.0 - y, x)
    y_out = np.where(use_y, y, 1.0 - x)
    return _polish(p, 1.0 - p, m, n, x_out, y_out)


def _polish(p, q, m, n, x, y):
    # one guarded Newton step on whichever tail is small
    inner = (x > 0) & (y > 0)
    if not np.any(inner):
        return x, y
    with np.errstate(all="ignore"):
        lower = x <= 0.5
        resid = np.where(lower, special.betainc(m, n, x) - p,
                         special.betainc(n, m, y) - q)
        dens = np.exp(_log_beta_pdf(x, y, m, n))
        step = resid / dens
        x_new = np.where(lower, x - step, 1.0 - (y + step))
        y_new = np.where(lower, 1.0 - (x - step), y + step)
        ok = inner & np.isfinite(step) & (x_new > 0) & (y_new > 0)
        resid_new = np.where(lower, special.betainc(m, n, x_new) - p,
                             special.betainc(n, m, y_new) - q)
        ok &= np.abs(resid_new) < np.abs(resid)
    return np.where(ok, x_new, x), np.where(ok, y_new, y)


def inv_inc_beta(p, m, n):
    """Inverse of :func:`inc_beta` in its first argument."""
    x, _ = inv_inc_beta_pair(p, m, n)
    return x[()] if np.ndim(x) == 0 else x


def beta_odds(u, a, uc=None):
    """Return ``(x/(1-x), x, 1-x)`` for ``x = I^{-1}_{1/2,a}(1 - u)``.

    This is the transform that maps uniforms to the gamma-mixture scale of
    the GLMGA family. ``uc`` optionally supplies ``1 - u`` exactly (callers
    working with reflected uniforms know it to full precision).
    """
    u = _unit(u, "u")
    uc = 1.0 - u if uc is None else _unit(uc, "uc")
    a = np.asarray(a, dtype=float)
    if np.any(~(a > 0)):
        raise DomainError("shape a must be positive")
    u, uc, a = np.broadcast_arrays(u, uc, a)
    # y = 1 - x = I^{-1}_{a,1/2}(u): accurate when x is near 1
    y = special.betaincinv(a, 0.5, u)
    x = special.betaincinv(0.5, a, uc)
    use_y = x > 0.5
    xx = np.where(use_y, 1.0 - y, x)
    yy = np.where(use_y, y, 1.0 - x)
    xx, yy = _polish(uc, u, np.full_like(a, 0.5), a, xx, yy)
    with np.errstate(divide="ignore"):
        t = xx / yy
    return t, xx, yy


def _dinc_beta_dn(x, y, n, rel_step=1e-5):
    """``d I_{1/2,z}(x) / dz`` at ``z = n`` by central differences.

    The smaller of ``I_{1/2,z}(x)`` and its complement ``I_{z,1/2}(y)``
    is differenced to avoid cancellation.
    """
    h = n * rel_step
    p_low = special.betainc(0.5, n, x)
    use_low = p_low <= 0.5
    d_low = (special.betainc(0.5, n + h, x) - special.betainc(0.5, n - h, x)) / (2 * h)
    d_up = -(special.betainc(n + h, 0.5, y) - special.betainc(n - h, 0.5, y)) / (2 * h)
    return np.where(use_low, d_low, d_up)


def _dquantile_dshape(x, y, n, rel_step=1e-5):
    """Derivative of ``I^{-1}_{1/2,z}(p)`` in ``z`` given the quantile pair.

    Implicit differentiation: ``dx/dz = -(dI/dz) / f(x)`` with ``f`` the
    Beta(1/2, z) density.
    """
    dI = _dinc_beta_dn(x, y, n, rel_step)
    dens = np.exp(_log_beta_pdf(x, y, 0.5, n))
    return -dI / dens


def d_inv_inc_beta_dshape(p, n):
    """Derivative of ``I^{-1}_{1/2,z}(p)`` with respect to ``z`` at ``z = n``."""
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0) & (p < 1))):
        raise DomainError("d_inv_inc_beta_dshape requires 0 < p < 1")
    n = np.asarray(n, dtype=float)
    if np.any(~(n > 0)):
        raise DomainError("shape n must be positive")
    x, y = inv_inc_beta_pair(p, 0.5, n)
    out = _dquantile_dshape(x, y, n)
    return out[()] if np.ndim(out) == 0 else out
