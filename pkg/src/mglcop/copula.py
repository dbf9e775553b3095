"""MGL and survival-MGL copulas, the MGB2 density and the Gumbel copula.

The MGL copula is parameterised by ``delta = 1/a`` where ``a`` is the shape
of the shared gamma mixing variable. Its cdf is the gamma expectation
``E[prod_j erfc(sqrt(t_j Theta))]`` and is evaluated by Gaussian
quadrature; densities and h-functions are closed form.
"""

from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy import linalg, special

from .errors import DimensionError, DomainError, QuadratureError
from .margins import PseudoSample
from .specfun import beta_odds

__all__ = [
    "CLAMP",
    "clamp",
    "t_fn",
    "mgl_copula_cdf",
    "mgl_copula_pdf",
    "mgl_copula_logpdf",
    "surv_mgl_cdf",
    "surv_mgl_pdf",
    "surv_mgl_logpdf",
    "mgb2_pdf",
    "mgb2_logpdf",
    "h_forward",
    "h_inverse",
    "surv_h_forward",
    "surv_h_inverse",
    "sample_mgl_copula",
    "kendall_tau",
    "spearman_rho",
    "tail_dependence",
    "gumbel_cdf",
    "gumbel_pdf",
    "gumbel_logpdf",
    "gumbel_h",
]

CLAMP = 1e-10
QUAD_NODES = 128
QUAD_TOL = 1e-8
MAX_SURV_DIM = 6


def clamp(u):
    return np.clip(np.asarray(u, dtype=float), CLAMP, 1.0 - CLAMP)


def _shape(delta):
    delta = np.asarray(delta, dtype=float)
    if np.any(~(delta > 0)) or np.any(~np.isfinite(delta)):
        raise DomainError("delta must be positive and finite")
    return 1.0 / delta


def _unit_box(u):
    u = np.asarray(u, dtype=float)
    if np.any(~((u >= 0) & (u <= 1))):
        raise DomainError("copula arguments must lie in [0, 1]")
    return u


def t_fn(u, delta):
    """Beta-odds transform ``t(u; 1/delta)``; decreasing from inf to 0."""
    u = clamp(_unit_box(u))
    t, _, _ = beta_odds(u, _shape(delta))
    return t[()] if np.ndim(t) == 0 else t


def _odds(u, a, reflect=False):
    """``(x, y)`` pair behind ``t(u)`` (or ``t(1 - u)`` when ``reflect``)."""
    u = clamp(u)
    if reflect:
        _, x, y = beta_odds(1.0 - u, a, uc=u)
    else:
        _, x, y = beta_odds(u, a)
    return x, y


# -- cdf ---------------------------------------------------------------------

@lru_cache(maxsize=256)
def _jacobi_rule(n, a):
    return special.roots_jacobi(n, 0.0, 2.0 * a - 1.0)


@lru_cache(maxsize=256)
def _gamma_rule(n, a):
    # Golub-Welsch for the Gamma(a, 1) law; weights sum to one
    k = np.arange(n)
    diag = 2 * k + a
    off = np.sqrt((k[1:]) * (k[1:] + a - 1.0))
    nodes, vecs = linalg.eigh_tridiagonal(diag, off)
    return nodes, vecs[0] ** 2


def _gamma_expectation(c, a, n, radius=8.0):
    """``E[exp(-R) prod_j erfcx(sqrt(c_j R))] * Gamma(a)`` style integral.

    Returns ``int_0^inf r^{a-1} e^{-r} prod erfcx(sqrt(c_j r)) dr / Gamma(a)``
    for each row of ``c``.
    """
    if a <= 10.0:
        # rho = sqrt(r) removes the square-root kink at the origin
        x, w = _jacobi_rule(n, a)
        rho = 0.5 * radius * (1.0 + x)
        g = np.exp(-rho ** 2) * np.prod(special.erfcx(np.sqrt(c[..., None, :]) * rho[:, None]),
                                         axis=-1)
        log_scale = np.log(2.0) + 2 * a * np.log(0.5 * radius) - special.gammaln(a)
        return np.exp(log_scale) * (g @ w)
    r, w = _gamma_rule(n, a)
    g = np.prod(special.erfcx(np.sqrt(c[..., None, :] * r[:, None])), axis=-1)
    return g @ w


def _cdf_scalar_delta(u, a, nodes):
    t, _, _ = beta_odds(clamp(u), a)
    t = np.where(u >= 1.0, 0.0, t)
    lam = 1.0 + np.sum(t, axis=-1)
    c = t / lam[..., None]
    fine = _gamma_expectation(c, a, nodes)
    coarse = _gamma_expectation(c, a, nodes // 2)
    gap = np.max(np.abs(fine - coarse) * lam ** -a, initial=0.0)
    if gap > QUAD_TOL:
        raise QuadratureError(
            f"copula cdf quadrature unstable (node change {gap:.2e} at delta={1 / a:g})",
            [{"nodes": nodes, "change": float(gap)}])
    return np.exp(-a * np.log(lam)) * fine


def mgl_copula_cdf(u, delta, nodes=QUAD_NODES):
    """MGL copula cdf at the rows of ``u`` (last axis is the dimension).

    Arguments equal to 0 give 0 exactly and arguments equal to 1 drop out.
    ``delta`` may be a scalar or one value per row.
    """
    u = _unit_box(u)
    if u.ndim == 0 or u.shape[-1] < 1:
        raise DimensionError("u must have a trailing dimension")
    a = _shape(delta)
    lead = u.shape[:-1]
    a = np.broadcast_to(a, lead)
    out = np.empty(lead)
    zero = np.any(u <= 0.0, axis=-1)
    out[zero] = 0.0
    for val in np.unique(a[~zero]):
        sel = (~zero) & (a == val)
        out[sel] = _cdf_scalar_delta(u[sel], float(val), nodes)
    return out[()] if out.ndim == 0 else out


# -- densities ---------------------------------------------------------------

def _log_density(x, y, a):
    """Log copula density in terms of the beta quantile pairs of each margin."""
    d = x.shape[-1]
    log1p_t = -np.log(y)
    log1p_sum = np.log1p(np.sum(x / y, axis=-1))
    return ((d - 1) * special.gammaln(a) + special.gammaln(a + d / 2)
            - d * special.gammaln(a + 0.5)
            + (a + 0.5) * np.sum(log1p_t, axis=-1) - (a + d / 2) * log1p_sum)


def _check_dim(u):
    u = _unit_box(u)
    if u.ndim == 0 or u.shape[-1] < 2:
        raise DimensionError("copula arguments need a trailing dimension d >= 2")
    return u


def mgl_copula_logpdf(u, delta):
    u = _check_dim(u)
    a = np.asarray(_shape(delta))[..., None]
    x, y = _odds(u, a)
    out = _log_density(x, y, a[..., 0])
    return out[()] if np.ndim(out) == 0 else out


def mgl_copula_pdf(u, delta):
    """MGL copula density; ``delta`` broadcasts against the leading axes."""
    return np.exp(mgl_copula_logpdf(u, delta))


def surv_mgl_logpdf(u, delta):
    u = _check_dim(u)
    a = np.asarray(_shape(delta))[..., None]
    x, y = _odds(u, a, reflect=True)
    out = _log_density(x, y, a[..., 0])
    return out[()] if np.ndim(out) == 0 else out


def surv_mgl_pdf(u, delta):
    """Survival MGL density ``c(1 - u)``."""
    return np.exp(surv_mgl_logpdf(u, delta))


def surv_mgl_cdf(u, delta, nodes=QUAD_NODES):
    """Survival MGL cdf by inclusion-exclusion over the ``2^d`` corners."""
    u = _check_dim(u)
    d = u.shape[-1]
    if d > MAX_SURV_DIM:
        raise DimensionError(f"survival cdf supports d <= {MAX_SURV_DIM}, got {d}")
    total = np.zeros(u.shape[:-1])
    for k in range(d + 1):
        for J in combinations(range(d), k):
            if k == 0:
                total = total + 1.0
                continue
            v = np.ones_like(u)
            v[..., list(J)] = 1.0 - u[..., list(J)]
            total = total + (-1) ** k * mgl_copula_cdf(v, delta, nodes)
    return np.clip(total, 0.0, 1.0)


def mgb2_logpdf(u, p, q):
    u = clamp(_check_dim(u))
    p = np.broadcast_to(np.asarray(p, dtype=float), (u.shape[-1],))
    if np.any(~(p > 0)) or not q > 0:
        raise DomainError("MGB2 parameters must be positive")
    d = u.shape[-1]
    # x/(1-x) with x = I^{-1}_{p,q}(u); complement from the swapped quantile
    xa = special.betaincinv(p, q, u)
    ya = special.betaincinv(q, p, 1.0 - u)
    use_y = xa > 0.5
    xx = np.where(use_y, 1.0 - ya, xa)
    yy = np.where(use_y, ya, 1.0 - xa)
    ps = np.sum(p)
    out = ((d - 1) * special.gammaln(q) + special.gammaln(ps + q)
           - np.sum(special.gammaln(p + q))
           - np.sum((p + q) * np.log(yy), axis=-1)
           - (ps + q) * np.log1p(np.sum(xx / yy, axis=-1)))
    return out[()] if np.ndim(out) == 0 else out


def mgb2_pdf(u, p, q):
    """MGB2 copula density with shape vector ``p`` and common shape ``q``."""
    return np.exp(mgb2_logpdf(u, p, q))


# -- h-functions -------------------------------------------------------------

def _pair(u_target, u_given, direction):
    if direction not in ("2|1", "1|2"):
        raise DomainError("direction must be '2|1' or '1|2'")
    return clamp(_unit_box(u_target)), clamp(_unit_box(u_given))


def h_forward(u_target, u_given, delta, direction="2|1"):
    """Conditional cdf ``P(U_target <= u_target | U_given = u_given)``.

    The copula is exchangeable, so ``direction`` only documents which
    coordinate is conditioned on.
    """
    ut, ug = _pair(u_target, u_given, direction)
    a = _shape(delta)
    tt, _, _ = beta_odds(ut, a)
    tg, _, _ = beta_odds(ug, a)
    z = (1.0 + tg) / (1.0 + tg + tt)
    out = special.betainc(a + 0.5, 0.5, z)
    return out[()] if np.ndim(out) == 0 else out


def h_inverse(w, u_given, delta, direction="2|1"):
    """Inverse of :func:`h_forward` in the target argument."""
    w, ug = _pair(w, u_given, direction)
    a = _shape(delta)
    tg, _, _ = beta_odds(ug, a)
    tw, xw, yw = beta_odds(w, a + 0.5)
    # total odds (1 + t_given) * t(w; a + 1/2) mapped back through t^{-1}
    T = (1.0 + tg) * tw
    out = special.betainc(a, 0.5, 1.0 / (1.0 + T))
    return out[()] if np.ndim(out) == 0 else out


def surv_h_forward(u_target, u_given, delta, direction="2|1"):
    """h-function of the survival copula, ``1 - h(1 - u_target | 1 - u_given)``."""
    ut, ug = _pair(u_target, u_given, direction)
    a = _shape(delta)
    tt, _, _ = beta_odds(1.0 - ut, a, uc=ut)
    tg, _, _ = beta_odds(1.0 - ug, a, uc=ug)
    out = special.betainc(0.5, a + 0.5, tt / (1.0 + tg + tt))
    return out[()] if np.ndim(out) == 0 else out


def surv_h_inverse(w, u_given, delta, direction="2|1"):
    w, ug = _pair(w, u_given, direction)
    a = _shape(delta)
    tg, _, _ = beta_odds(1.0 - ug, a, uc=ug)
    tw, _, _ = beta_odds(1.0 - w, a + 0.5, uc=w)
    T = (1.0 + tg) * tw
    out = special.betainc(0.5, a, T / (1.0 + T))
    return out[()] if np.ndim(out) == 0 else out


# -- simulation --------------------------------------------------------------

def sample_mgl_copula(delta, d, n, seed=None, survival=False):
    """Draw ``n`` points from the ``d``-variate MGL (or survival MGL) copula.

    Sequential construction: ``Z_j = t(U_j; 1/delta + (j-1)/2)``,
    ``M_j = (1 + sum_{k<j} M_k) Z_j`` and ``U*_j = I_{a,1/2}(1/(1 + M_j))``.
    ``delta`` may hold one value per draw.
    """
    if n < 1 or d < 2:
        raise DomainError("need n >= 1 and d >= 2")
    a = np.broadcast_to(_shape(delta), (n,))
    rng = np.random.default_rng(seed)
    U = rng.uniform(size=(n, d))
    out = np.empty((n, d))
    acc = np.zeros(n)
    for j in range(d):
        Z, _, _ = beta_odds(U[:, j], a + j / 2)
        M = (1.0 + acc) * Z
        acc = acc + M
        if survival:
            out[:, j] = special.betainc(0.5, a, M / (1.0 + M))
        else:
            out[:, j] = special.betainc(a, 0.5, 1.0 / (1.0 + M))
    return PseudoSample(clamp(out), "parametric")


# -- dependence measures -----------------------------------------------------

@lru_cache(maxsize=8)
def _unit_rule(n):
    # Gauss-Legendre on [0, 1] after u = (1 - cos(pi s)) / 2, clustering at corners
    x, w = special.roots_legendre(n)
    s = 0.5 * (x + 1.0)
    u = 0.5 * (1.0 - np.cos(np.pi * s))
    return u, 0.5 * w * 0.5 * np.pi * np.sin(np.pi * s)


def _tensor(fun, n):
    u, w = _unit_rule(n)
    U1, U2 = np.meshgrid(u, u, indexing="ij")
    return float(np.sum(np.outer(w, w) * fun(U1, U2)))


def _checked(fun, delta, name, nodes=64, tol=1e-6):
    fine = _tensor(fun, 2 * nodes)
    coarse = _tensor(fun, nodes)
    if abs(fine - coarse) > tol:
        raise QuadratureError(f"{name} quadrature unstable at delta={delta:g}",
                              [{"nodes": nodes, "change": abs(fine - coarse)}])
    return fine


def kendall_tau(delta):
    """Kendall's tau ``1 - 4 int int h_{2|1} h_{1|2}``."""
    _shape(delta)

    def integrand(u, v):
        return h_forward(v, u, delta) * h_forward(u, v, delta)
    return 1.0 - 4.0 * _checked(integrand, delta, "Kendall tau")


def spearman_rho(delta):
    """Spearman's rho ``3 - 12 int int u h_{2|1}(v|u)``."""
    _shape(delta)

    def integrand(u, v):
        return u * h_forward(v, u, delta)
    return 3.0 - 12.0 * _checked(integrand, delta, "Spearman rho")


def tail_dependence(delta):
    """``(lambda_lower, lambda_upper)`` of the MGL copula.

    ``lambda_lower = 2 - 2 I_{1/2, a+1/2}(1/2) = 2 I_{a+1/2, 1/2}(1/2)``;
    the survival copula swaps the pair.
    """
    a = float(_shape(delta))
    return float(2.0 * special.betainc(a + 0.5, 0.5, 0.5)), 0.0


# -- Gumbel ------------------------------------------------------------------

def _gumbel_args(u1, u2, delta):
    delta = np.asarray(delta, dtype=float)
    if np.any(~(delta >= 1)):
        raise DomainError("Gumbel parameter must be >= 1")
    u1 = clamp(_unit_box(u1))
    u2 = clamp(_unit_box(u2))
    x, y = -np.log(u1), -np.log(u2)
    lx, ly = np.log(x), np.log(y)
    # log(x^d + y^d) without overflow
    log_s = np.logaddexp(delta * lx, delta * ly)
    return u1, u2, x, y, lx, ly, log_s, delta


def gumbel_cdf(u1, u2, delta):
    u1, u2, x, y, lx, ly, log_s, delta = _gumbel_args(u1, u2, delta)
    return np.exp(-np.exp(log_s / delta))


def gumbel_logpdf(u1, u2, delta):
    u1, u2, x, y, lx, ly, log_s, delta = _gumbel_args(u1, u2, delta)
    A = np.exp(log_s / delta)
    return (-A - np.log(u1) - np.log(u2) + (delta - 1) * (lx + ly)
            - (2.0 - 1.0 / delta) * log_s + np.log(A + delta - 1.0))


def gumbel_pdf(u1, u2, delta):
    """Gumbel copula density (``delta >= 1``; ``delta = 1`` is independence)."""
    return np.exp(gumbel_logpdf(u1, u2, delta))


def gumbel_h(u_target, u_given, delta):
    """``P(U_target <= u_target | U_given = u_given)`` for the Gumbel copula."""
    ug, ut, x, y, lx, ly, log_s, delta = _gumbel_args(u_given, u_target, delta)
    A = np.exp(log_s / delta)
    return np.exp(-A + (1.0 / delta - 1.0) * log_s + (delta - 1) * lx + x)
