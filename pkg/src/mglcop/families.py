"""Uniform interface over the bivariate copula families used in applications."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import copula as cop
from . import evcopula as ev
from .errors import DimensionError, DomainError

__all__ = ["CopulaFamily", "CopulaSpec", "delta_from_linear", "linear_from_delta"]


class CopulaFamily(str, Enum):
    MGL = "mgl"
    SURV_MGL = "surv_mgl"
    MGL_EV = "mgl_ev"
    SURV_MGL_EV = "surv_mgl_ev"
    MGB2 = "mgb2"
    GUMBEL = "gumbel"


def delta_from_linear(eta, family):
    """Inverse link: ``exp(eta)``, or ``1 + exp(eta)`` for Gumbel."""
    eta = np.asarray(eta, dtype=float)
    return 1.0 + np.exp(eta) if CopulaFamily(family) is CopulaFamily.GUMBEL else np.exp(eta)


def linear_from_delta(delta, family):
    delta = np.asarray(delta, dtype=float)
    if CopulaFamily(family) is CopulaFamily.GUMBEL:
        return np.log(delta - 1.0)
    return np.log(delta)


def _cols(u):
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != 2:
        raise DimensionError("this family is implemented for d = 2")
    return u[..., 0], u[..., 1]


@dataclass(frozen=True)
class CopulaSpec:
    """Family tag plus parameter; ``params`` is ``delta`` or ``(p_1, ..., p_d, q)``.

    ``delta`` may be an array holding one value per observation.
    """

    family: CopulaFamily
    params: object

    def __post_init__(self):
        object.__setattr__(self, "family", CopulaFamily(self.family))

    @property
    def delta(self):
        if self.family is CopulaFamily.MGB2:
            raise DomainError("MGB2 has no single dependence parameter")
        return self.params

    def logpdf(self, u):
        f = self.family
        u = np.asarray(u, dtype=float)
        if f is CopulaFamily.MGL:
            return cop.mgl_copula_logpdf(u, self.delta)
        if f is CopulaFamily.SURV_MGL:
            return cop.surv_mgl_logpdf(u, self.delta)
        if f is CopulaFamily.MGB2:
            p = np.asarray(self.params, dtype=float)
            return cop.mgb2_logpdf(u, p[:-1], p[-1])
        u1, u2 = _cols(u)
        if f is CopulaFamily.SURV_MGL_EV:
            return ev.ev_logpdf(u1, u2, self.delta)
        if f is CopulaFamily.MGL_EV:
            return ev.ev_logpdf(1.0 - u1, 1.0 - u2, self.delta)
        return cop.gumbel_logpdf(u1, u2, self.delta)

    def pdf(self, u):
        return np.exp(self.logpdf(u))

    def cdf(self, u):
        f = self.family
        u = np.asarray(u, dtype=float)
        if f is CopulaFamily.MGL:
            return cop.mgl_copula_cdf(u, self.delta)
        if f is CopulaFamily.SURV_MGL:
            return cop.surv_mgl_cdf(u, self.delta)
        if f is CopulaFamily.MGB2:
            raise DomainError("MGB2 cdf is not implemented")
        u1, u2 = _cols(u)
        if f is CopulaFamily.SURV_MGL_EV:
            return ev.ev_cdf(u1, u2, self.delta)
        if f is CopulaFamily.MGL_EV:
            return u1 + u2 - 1.0 + ev.ev_cdf(1.0 - u1, 1.0 - u2, self.delta)
        return cop.gumbel_cdf(u1, u2, self.delta)

    def h(self, u_target, u_given):
        """``P(U_target <= u_target | U_given = u_given)`` (exchangeable families)."""
        f = self.family
        if f is CopulaFamily.MGL:
            return cop.h_forward(u_target, u_given, self.delta)
        if f is CopulaFamily.SURV_MGL:
            return cop.surv_h_forward(u_target, u_given, self.delta)
        if f is CopulaFamily.SURV_MGL_EV:
            return ev.ev_h(u_target, u_given, self.delta)
        if f is CopulaFamily.MGL_EV:
            ut = np.asarray(u_target, dtype=float)
            ug = np.asarray(u_given, dtype=float)
            return 1.0 - ev.ev_h(1.0 - ut, 1.0 - ug, self.delta)
        if f is CopulaFamily.GUMBEL:
            return cop.gumbel_h(u_target, u_given, self.delta)
        raise DomainError("MGB2 h-function is not implemented")

    def sample(self, n, seed=None, d=2):
        f = self.family
        if f in (CopulaFamily.MGL, CopulaFamily.SURV_MGL):
            return cop.sample_mgl_copula(self.delta, d, n, seed,
                                         survival=f is CopulaFamily.SURV_MGL)
        if f is CopulaFamily.SURV_MGL_EV:
            return ev.sample_ev(self.delta, n, seed)
        if f is CopulaFamily.MGL_EV:
            s = ev.sample_ev(self.delta, n, seed)
            return type(s)(1.0 - s.values, s.method)
        raise DomainError(f"sampling is not implemented for {f.value}")
