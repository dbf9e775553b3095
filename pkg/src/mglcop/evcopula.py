"""Extreme-value limits of the MGL family.

The survival MGL copula lies in the max-domain of attraction of an
extreme-value copula (MGL-EV) whose Pickands function is a mixture of two
incomplete beta functions. Everything here is bivariate except the stable
tail dependence function, which is available in any dimension.
"""

import numpy as np
from scipy import special

from .copula import _gamma_rule, _jacobi_rule, _shape, clamp
from .errors import DimensionError, DomainError, NonConvergenceError
from .margins import PseudoSample

__all__ = [
    "pickands_A",
    "stable_tail_l",
    "ev_cdf",
    "ev_pdf",
    "ev_logpdf",
    "ev_h",
    "ev_lower_copula",
    "sample_ev",
]


def _ratio(log_z1, log_z2, delta):
    # r2 = z2^-d / (z1^-d + z2^-d) and its complement, as logs
    s = delta * (log_z1 - log_z2)
    return special.log_expit(s), special.log_expit(-s)


def _ibeta(log_r, b):
    return special.betainc(0.5, b, np.exp(log_r))


def pickands_A(w, delta):
    """Pickands dependence function of the survival MGL-EV copula."""
    w = np.asarray(w, dtype=float)
    if np.any(~((w >= 0) & (w <= 1))):
        raise DomainError("w must lie in [0, 1]")
    b = _shape(delta) + 0.5
    with np.errstate(divide="ignore"):
        lr2, lr1 = _ratio(np.log(w), np.log1p(-w), delta)
    out = w * _ibeta(lr2, b) + (1.0 - w) * _ibeta(lr1, b)
    return out[()] if out.ndim == 0 else out


def _l2(z1, z2, delta):
    """Bivariate ``l`` and its first and mixed partial derivatives."""
    delta = np.asarray(delta, dtype=float)
    b = 1.0 / delta + 0.5
    with np.errstate(divide="ignore", invalid="ignore"):
        lz1, lz2 = np.log(z1), np.log(z2)
        lr2, lr1 = _ratio(lz1, lz2, delta)
        l1 = _ibeta(lr2, b)
        l2 = _ibeta(lr1, b)
        val = np.where(z1 > 0, z1 * l1, 0.0) + np.where(z2 > 0, z2 * l2, 0.0)
        # I'_{1/2,b}(r2) = r2^{-1/2} r1^{b-1} / B(1/2, b)
        log_dens = -0.5 * lr2 + (b - 1.0) * lr1 - special.betaln(0.5, b)
        l12 = -delta * np.exp(lr1 + lr2 + log_dens - lz2)
    return val, l1, l2, l12


def stable_tail_l(u, delta, nodes=64):
    """Stable tail dependence function at the rows of ``u`` (``u >= 0``).

    In dimension ``d`` this is ``sum_j u_j E[prod_{k != j} erf(sqrt(W c_jk))]``
    with ``W ~ Gamma(1/delta + 1/2)`` and ``c_jk = (u_k/u_j)^{-delta}``; for
    ``d = 2`` the expectation reduces to an incomplete beta function.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim == 0 or u.shape[-1] < 2:
        raise DimensionError("u needs a trailing dimension d >= 2")
    if np.any(~(u >= 0)):
        raise DomainError("stable tail function needs nonnegative arguments")
    d = u.shape[-1]
    if d == 2:
        out = _l2(u[..., 0], u[..., 1], delta)[0]
        return out[()] if np.ndim(out) == 0 else out
    delta = float(delta)
    b = 1.0 / delta + 0.5
    if b <= 10.0:
        x, w = _jacobi_rule(nodes, b)
        radius = 8.0
        rho = 0.5 * radius * (1.0 + x)
        weight = w * np.exp(np.log(2.0) + 2 * b * np.log(0.5 * radius) - special.gammaln(b)
                            - rho ** 2)
    else:
        r, weight = _gamma_rule(nodes, b)
        rho = np.sqrt(r)
    total = np.zeros(u.shape[:-1])
    with np.errstate(divide="ignore", invalid="ignore"):
        for j in range(d):
            others = [k for k in range(d) if k != j]
            # sqrt(c_jk) = (u_k/u_j)^{-delta/2}; zero u_k means erf -> 1
            root_c = np.exp(-0.5 * delta * (np.log(u[..., others]) - np.log(u[..., j:j + 1])))
            g = np.prod(special.erf(root_c[..., None, :] * rho[:, None]), axis=-1)
            g = np.where(np.isnan(g), 1.0, g)
            total = total + np.where(u[..., j] > 0, u[..., j] * (g @ weight), 0.0)
    return total[()] if total.ndim == 0 else total


def _z(u1, u2, do_clamp=True):
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if np.any(~((u1 >= 0) & (u1 <= 1))) or np.any(~((u2 >= 0) & (u2 <= 1))):
        raise DomainError("copula arguments must lie in [0, 1]")
    if do_clamp:
        u1, u2 = clamp(u1), clamp(u2)
    with np.errstate(divide="ignore"):
        return u1, u2, -np.log(u1), -np.log(u2)


def ev_cdf(u1, u2, delta):
    """Survival MGL-EV copula ``exp(-l(-log u1, -log u2))``."""
    _shape(delta)
    u1, u2, z1, z2 = _z(u1, u2, do_clamp=False)
    with np.errstate(invalid="ignore"):
        val = _l2(z1, z2, delta)[0]
        out = np.where((u1 <= 0) | (u2 <= 0), 0.0, np.exp(-val))
    return out[()] if out.ndim == 0 else out


def ev_logpdf(u1, u2, delta):
    _shape(delta)
    u1, u2, z1, z2 = _z(u1, u2)
    val, l1, l2, l12 = _l2(z1, z2, delta)
    out = -val + z1 + z2 + np.log(l1 * l2 - l12)
    return out[()] if out.ndim == 0 else out


def ev_pdf(u1, u2, delta):
    """Density ``C0/(u1 u2) (l_1 l_2 - l_12)`` at ``z = -log u``."""
    return np.exp(ev_logpdf(u1, u2, delta))


def _ev_h_raw(ut, ug, delta):
    with np.errstate(divide="ignore"):
        zg, zt = -np.log(ug), -np.log(ut)
    val, lg, _, _ = _l2(zg, zt, delta)
    return np.exp(-val + zg) * lg


def ev_h(u_target, u_given, delta):
    """``P(U_target <= u_target | U_given = u_given)``; the copula is exchangeable."""
    _shape(delta)
    ut, ug, _, _ = _z(u_target, u_given)
    out = _ev_h_raw(ut, ug, delta)
    return out[()] if out.ndim == 0 else out


def ev_lower_copula(u1, u2, delta):
    """Limiting lower-tail copula of the MGL copula (nonnegative arguments)."""
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if np.any(u1 < 0) or np.any(u2 < 0):
        raise DomainError("arguments must be nonnegative")
    norm = 1.0 - pickands_A(0.5, delta)
    if not norm > 0:
        raise DomainError("lower-tail copula degenerates when A(1/2) = 1")
    s = u1 + u2
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(s > 0, u1 / np.where(s > 0, s, 1.0), 0.5)
    out = s * (1.0 - pickands_A(w, delta)) / (2.0 * norm)
    return out[()] if np.ndim(out) == 0 else out


def sample_ev(delta, n, seed=None, tol=1e-10):
    """Conditional-inverse sampling: bisection of ``ev_h`` in its target argument.

    ``delta`` may hold one value per draw.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    _shape(delta)
    delta = np.broadcast_to(np.asarray(delta, dtype=float), (n,))
    rng = np.random.default_rng(seed)
    u1 = rng.uniform(size=n)
    w = rng.uniform(size=n)
    lo = np.zeros(n)
    hi = np.ones(n)
    with np.errstate(all="ignore"):
        if np.any(_ev_h_raw(hi, u1, delta) < w):
            raise NonConvergenceError("ev_h does not bracket the target level", [])
        steps = int(np.ceil(np.log2(1.0 / tol))) + 1
        for _ in range(steps):
            mid = 0.5 * (lo + hi)
            below = _ev_h_raw(mid, u1, delta) < w
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
    return PseudoSample(clamp(np.column_stack([u1, 0.5 * (lo + hi)])), "parametric")
