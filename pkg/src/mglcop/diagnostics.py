"""Model-comparison diagnostics and the regression simulation study."""

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy import special

from .copula import sample_mgl_copula
from .errors import DimensionError, DomainError, NonConvergenceError, NonFiniteError
from .margins import PseudoSample
from .regression import fit_copula_reg

__all__ = [
    "TailWeightConfig",
    "empirical_copula",
    "fit_error_eA",
    "tw_dep_empirical",
    "tw_dep_model",
    "reflect",
    "bootstrap_ci",
    "load_scenario",
    "simstudy",
]


def _workers():
    """Worker count from ``MGLCOP_THREADS`` (default 1, i.e. sequential)."""
    try:
        return max(1, int(os.environ.get("MGLCOP_THREADS", "1")))
    except ValueError:
        raise DomainError("MGLCOP_THREADS must be an integer") from None


def _map(fn, items):
    # results keep input order, so aggregation is independent of scheduling
    items = list(items)
    workers = _workers()
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, items))


def _values(pseudo):
    u = np.asarray(pseudo.values if isinstance(pseudo, PseudoSample) else pseudo, dtype=float)
    if u.ndim != 2 or u.shape[1] != 2:
        raise DimensionError("diagnostics expect bivariate pseudo-observations")
    return u


def empirical_copula(pseudo, t):
    """Share of points with ``u_i1 < t1`` and ``u_i2 < t2``; broadcasting over ``t``."""
    u = _values(pseudo)
    t = np.asarray(t, dtype=float)
    if np.any(~((t >= 0) & (t <= 1))):
        raise DomainError("t must lie in [0, 1]^2")
    t1 = t[..., 0, None]
    t2 = t[..., 1, None]
    inside = ((u[:, 0] < t1) | (t1 >= 1)) & ((u[:, 1] < t2) | (t2 >= 1))
    out = inside.mean(axis=-1)
    return out[()] if np.ndim(out) == 0 else out


def fit_error_eA(pseudo, cdf, region=((0.0, 1.0), (0.0, 1.0)), grid=50):
    """Squared-difference fit error between a copula cdf and the empirical copula.

    ``cdf`` maps an ``(m, 2)`` array to ``m`` values. A ``grid x grid``
    midpoint rule on ``region`` gives ``e_A`` (root of the mean squared
    difference) and ``ise`` (the unnormalised integral of the squared
    difference).
    """
    (a1, b1), (a2, b2) = region
    if not (0 <= a1 < b1 <= 1 and 0 <= a2 < b2 <= 1):
        raise DomainError("region must be a non-empty rectangle inside the unit square")
    if grid < 1:
        raise DomainError("grid must be positive")
    m1 = a1 + (np.arange(grid) + 0.5) * (b1 - a1) / grid
    m2 = a2 + (np.arange(grid) + 0.5) * (b2 - a2) / grid
    pts = np.stack(np.meshgrid(m1, m2, indexing="ij"), axis=-1).reshape(-1, 2)
    diff = np.asarray(cdf(pts), dtype=float) - empirical_copula(pseudo, pts)
    mse = float(np.mean(diff ** 2))
    area = (b1 - a1) * (b2 - a2)
    return {"e_A": float(np.sqrt(mse)), "ise": mse * area, "grid": int(grid),
            "region": [[a1, b1], [a2, b2]]}


@dataclass(frozen=True)
class TailWeightConfig:
    k: int = 6
    p: float = 0.5

    def __post_init__(self):
        if not (self.k >= 1 and 0 < self.p < 1):
            raise DomainError("need k >= 1 and p in (0, 1)")

    def a(self, x):
        return x ** self.k

    def da(self, x):
        return self.k * x ** (self.k - 1)


def tw_dep_empirical(pseudo, cfg=TailWeightConfig(), min_points=30):
    """Empirical upper tail-weighted dependence: weighted correlation of the joint tail."""
    u = _values(pseudo)
    v = 1.0 - u
    sel = (v[:, 0] < cfg.p) & (v[:, 1] < cfg.p)
    if sel.sum() < min_points:
        raise DomainError(f"only {int(sel.sum())} points in the tail region")
    w = cfg.a(1.0 - v[sel] / cfg.p)
    return float(np.corrcoef(w[:, 0], w[:, 1])[0, 1])


def reflect(cdf):
    """Survival copula ``u1 + u2 - 1 + C(1 - u1, 1 - u2)`` of a cdf callable."""
    def refl(pts):
        pts = np.asarray(pts, dtype=float)
        return pts[..., 0] + pts[..., 1] - 1.0 + np.asarray(cdf(1.0 - pts))
    return refl


def _lower_measure(cdf, cfg, n):
    x, w = special.roots_legendre(n)
    p = cfg.p
    s = 0.5 * p * (x + 1.0)
    ws = 0.5 * p * w
    da = cfg.da(1.0 - s / p)
    a = cfg.a(1.0 - s / p)
    S1, S2 = np.meshgrid(s, s, indexing="ij")
    C2 = np.asarray(cdf(np.stack([S1.ravel(), S2.ravel()], axis=1))).reshape(n, n)
    m12 = np.einsum("i,j,ij->", ws * da, ws * da, C2) / p ** 2
    edge1 = np.asarray(cdf(np.column_stack([s, np.full(n, p)])))
    edge2 = np.asarray(cdf(np.column_stack([np.full(n, p), s])))
    m1 = np.sum(ws * da * edge1) / p
    m2 = np.sum(ws * da * edge2) / p
    m11 = np.sum(ws * 2 * a * da * edge1) / p
    m22 = np.sum(ws * 2 * a * da * edge2) / p
    cpp = float(np.asarray(cdf(np.array([[p, p]])))[0])
    return (cpp * m12 - m1 * m2) / np.sqrt((cpp * m11 - m1 ** 2) * (cpp * m22 - m2 ** 2))


def tw_dep_model(cdf, cfg=TailWeightConfig(), tail="upper", nodes=48, tol=1e-6):
    """Model tail-weighted dependence by Gauss-Legendre quadrature.

    The lower-tail integrals are applied to ``cdf`` directly for
    ``tail="lower"`` and to its survival copula for ``tail="upper"``.
    Raises :class:`NonConvergenceError` when doubling the nodes moves the
    value by more than ``tol``.
    """
    if tail not in ("upper", "lower"):
        raise DomainError("tail must be 'upper' or 'lower'")
    target = reflect(cdf) if tail == "upper" else cdf
    coarse = _lower_measure(target, cfg, nodes)
    fine = _lower_measure(target, cfg, 2 * nodes)
    if not abs(fine - coarse) <= tol:
        raise NonConvergenceError("tail-weighted quadrature did not settle",
                                  [{"coarse": float(coarse), "fine": float(fine)}])
    return float(fine)


def bootstrap_ci(data, fit, statistic, sample, n_boot=200, level=0.95, seed=None,
                 max_fail=0.10):
    """Parametric-bootstrap percentile interval for ``statistic(fit(data))``.

    ``sample(params, n, rng)`` simulates a data set of the original size,
    which is refitted before the statistic is recomputed. Replicates use
    independent seed streams spawned from ``seed``.
    """
    if n_boot < 100:
        raise DomainError("n_boot must be at least 100")
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    n = len(data)
    params = fit(data)
    estimate = float(statistic(params))

    def one(child):
        rng = np.random.default_rng(child)
        try:
            return float(statistic(fit(sample(params, n, rng))))
        except (NonConvergenceError, NonFiniteError, DomainError):
            return None

    results = _map(one, np.random.SeedSequence(seed).spawn(n_boot))
    draws = [v for v in results if v is not None]
    failures = n_boot - len(draws)
    if failures > max_fail * n_boot:
        raise NonConvergenceError(f"{failures} of {n_boot} bootstrap refits failed",
                                  [{"failures": failures}])
    draws = np.asarray(draws)
    alpha = 0.5 * (1.0 - level)
    lo, hi = np.quantile(draws, [alpha, 1.0 - alpha])
    return {"estimate": estimate, "lo": float(lo), "hi": float(hi), "level": level,
            "n_boot": n_boot, "failures": failures, "draws": draws}


# -- simulation study ---------------------------------------------------------

_SCENARIO_KEYS = {"name", "d", "beta", "n_grid", "replicates", "covariates", "periods"}


def load_scenario(name_or_path):
    """Load a bundled scenario (``"d2"``, ``"dynamic"``) or a JSON file."""
    bundled = {"d2": "simstudy_d2.json", "dynamic": "simstudy_dynamic.json"}
    if name_or_path in bundled:
        text = resources.files("mglcop").joinpath("data", bundled[name_or_path]).read_text()
    else:
        with open(name_or_path, encoding="utf-8") as fh:
            text = fh.read()
    return json.loads(text)


def _validate(cfg):
    unknown = set(cfg) - _SCENARIO_KEYS
    if unknown:
        raise DomainError(f"unknown scenario keys: {sorted(unknown)}")
    for key in ("d", "beta", "n_grid", "replicates"):
        if key not in cfg:
            raise DomainError(f"scenario is missing '{key}'")
    if int(cfg["replicates"]) < 1:
        raise DomainError("scenario needs at least one replicate")
    if int(cfg["d"]) < 2 or not cfg["n_grid"]:
        raise DomainError("scenario needs d >= 2 and a non-empty n grid")
    if cfg.get("covariates", "normal") not in ("normal", "time"):
        raise DomainError("covariates must be 'normal' or 'time'")


def _design(cfg, n, rng):
    k = len(cfg["beta"])
    if cfg.get("covariates", "normal") == "time":
        periods = int(cfg.get("periods", 24))
        t = np.repeat(np.arange(1, periods + 1), int(np.ceil(n / periods)))[:n]
        return np.column_stack([np.ones(n), t.astype(float)])
    return np.column_stack([np.ones(n), rng.standard_normal((n, k - 1))])


def simstudy(cfg, seed=0):
    """Replicated survival-MGL regression fits.

    Returns ``{"rows": [...], "estimates": {n: array}}``. Each row holds,
    for one sample size and coefficient, the bias, variance (population
    form), MSE, median, the Monte-Carlo s.e. of the median and the number
    of failed replicates.
    """
    _validate(cfg)
    beta = np.asarray(cfg["beta"], dtype=float)
    d = int(cfg["d"])
    reps = int(cfg["replicates"])
    rows = []
    estimates = {}
    streams = np.random.SeedSequence(seed).spawn(len(cfg["n_grid"]))
    for n, stream in zip(cfg["n_grid"], streams):
        n = int(n)

        def one(child, n=n):
            rng = np.random.default_rng(child)
            X = _design(cfg, n, rng)
            u = sample_mgl_copula(np.exp(X @ beta), d, n, rng, survival=True)
            try:
                return fit_copula_reg(u, X).beta
            except (NonConvergenceError, NonFiniteError):
                return None

        results = _map(one, stream.spawn(reps))
        est = np.asarray([b for b in results if b is not None])
        failures = reps - len(est)
        estimates[n] = est
        for h in range(beta.size):
            col = est[:, h] if est.size else np.array([np.nan])
            bias = float(np.mean(col) - beta[h])
            var = float(np.var(col))
            rows.append({
                "n": n, "coef": h, "true": float(beta[h]), "bias": bias, "variance": var,
                "mse": bias ** 2 + var, "median": float(np.median(col)),
                "mc_se_median": float(np.sqrt(np.pi / 2) * np.std(col, ddof=1) / np.sqrt(col.size))
                if col.size > 1 else float("nan"),
                "replicates": int(col.size), "failures": failures,
            })
    return {"rows": rows, "estimates": estimates}
