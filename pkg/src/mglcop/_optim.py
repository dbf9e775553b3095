"""Optimisation helpers shared by the fitting routines."""

import numpy as np
from scipy import optimize

from .errors import NonConvergenceError


def numeric_hessian(fun, x, grad=None):
    """Central-difference Hessian of a scalar function.

    With ``grad`` the Hessian is built from differences of the gradient
    (one order more accurate); otherwise from second differences of
    ``fun``. Step per coordinate is ``max(1e-5, 1e-4 * |x_i|)``.
    """
    x = np.asarray(x, dtype=float)
    k = x.size
    steps = np.maximum(1e-5, 1e-4 * np.abs(x))
    H = np.empty((k, k))
    if grad is not None:
        for i in range(k):
            e = np.zeros(k)
            e[i] = steps[i]
            H[i] = (grad(x + e) - grad(x - e)) / (2 * steps[i])
        return 0.5 * (H + H.T)
    f0 = fun(x)
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = steps[i]
        H[i, i] = (fun(x + ei) - 2 * f0 + fun(x - ei)) / steps[i] ** 2
        for j in range(i):
            ej = np.zeros(k)
            ej[j] = steps[j]
            H[i, j] = H[j, i] = (
                fun(x + ei + ej) - fun(x + ei - ej) - fun(x - ei + ej) + fun(x - ei - ej)
            ) / (4 * steps[i] * steps[j])
    return H


def invert_hessian(H):
    """Inverse of an observed-information matrix; flags singular cases."""
    try:
        cov = np.linalg.inv(H)
    except np.linalg.LinAlgError:
        return np.full_like(H, np.nan), True
    singular = not np.all(np.isfinite(cov)) or np.any(np.diag(cov) <= 0)
    return cov, singular


def minimize_restarts(fun, x0, jac=None, restarts=3, jitter=0.1, seed=0, gtol=1e-6):
    """Quasi-Newton minimisation with jittered restarts.

    BFGS runs from ``x0``; restarts from jittered points happen only when
    that run fails. The best converged run is returned. Raises
    :class:`NonConvergenceError` with a trace of all attempts otherwise.
    """
    rng = np.random.default_rng(seed)
    x0 = np.asarray(x0, dtype=float)
    trace = []
    best = None
    starts = [x0] + [x0 + jitter * rng.standard_normal(x0.size) for _ in range(restarts)]
    for start in starts:
        with np.errstate(all="ignore"):
            res = optimize.minimize(fun, start, jac=jac, method="BFGS",
                                    options={"gtol": gtol, "maxiter": 500})
        ok = np.isfinite(res.fun) and (res.success or _near_stationary(res, gtol))
        trace.append({"start": start.tolist(), "fun": float(res.fun),
                      "nit": int(res.nit), "message": str(res.message), "ok": bool(ok)})
        if ok and (best is None or res.fun < best.fun):
            best = res
        if best is not None:
            break
    if best is None:
        raise NonConvergenceError("optimizer failed from all starting points", trace)
    best.trace = trace
    return best


def _near_stationary(res, gtol):
    # BFGS often stops with "precision loss" at a genuine optimum; allow for
    # finite-difference gradient noise, which grows with |f|
    jac = getattr(res, "jac", None)
    noise = np.sqrt(np.finfo(float).eps) * abs(float(res.fun))
    return (jac is not None and np.all(np.isfinite(jac))
            and np.max(np.abs(jac)) < 1e3 * gtol + noise)
