"""Acceptance criteria; a per-criterion PASS/FAIL table is printed at the end of the run."""

import csv
import math
import time

import numpy as np
import pytest
from scipy import stats

from conftest import session_elapsed, session_failures
from mglcop.copula import (h_forward, h_inverse, kendall_tau, mgb2_pdf, mgl_copula_cdf,
                           mgl_copula_pdf, sample_mgl_copula, surv_h_forward, surv_h_inverse,
                           surv_mgl_cdf, surv_mgl_pdf, tail_dependence)
from mglcop.diagnostics import TailWeightConfig, load_scenario, simstudy, tw_dep_model
from mglcop.evcopula import ev_cdf, pickands_A, stable_tail_l
from mglcop.families import CopulaSpec
from mglcop.glmga import GlmgaParams, glmga_fit, glmga_pdf, glmga_quantile
from mglcop.margins import kernel_pseudo_obs, spliced_fit
from mglcop.mgl import MglParams, mgl_pdf
from mglcop.regression import (fit_copula_reg, grad_surv_mgl_reg, ifm_fit, loglik_surv_mgl_reg,
                               ns_basis, quantile_knots)
from mglcop.specfun import inc_beta, inv_inc_beta


# -- 1 --------------------------------------------------------------------------

@pytest.mark.criterion(1)
def test_c1_special_functions():
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    p = rng.uniform(1e-6, 1 - 1e-6, 1000)
    m = rng.uniform(0.5, 5.0, 1000)
    n = rng.uniform(0.5, 5.0, 1000)
    assert np.max(np.abs(inc_beta(inv_inc_beta(p, m, n), m, n) - p)) < 1e-10
    x = np.linspace(1e-6, 1 - 1e-6, 1000)
    assert np.max(np.abs(inc_beta(x, 0.5, 1.0) - np.sqrt(x))) < 1e-12
    closed = 2 / np.pi * (np.arcsin(np.sqrt(x)) + np.sqrt(x * (1 - x)))
    assert np.max(np.abs(inc_beta(x, 0.5, 1.5) - closed)) < 1e-12
    assert time.perf_counter() - start < 1.0


# -- 2 --------------------------------------------------------------------------

@pytest.mark.criterion(2)
def test_c2_tail_dependence():
    assert tail_dependence(1.0)[0] == pytest.approx(2 - 2 * (0.5 + 1 / math.pi), abs=1e-12)
    assert tail_dependence(1.0)[0] == pytest.approx(0.3634, abs=1e-4)
    assert tail_dependence(1e-4)[0] < 1e-3
    assert tail_dependence(1e6)[0] > 0.999


# -- 3 --------------------------------------------------------------------------

@pytest.mark.criterion(3)
def test_c3_density_sklar():
    rng = np.random.default_rng(3)
    for d in (2, 3, 5):
        for _ in range(4):
            p = MglParams(tuple(rng.uniform(0.2, 1.5, d)), rng.uniform(0.3, 3.0),
                          tuple(rng.uniform(0.2, 3.0, d)))
            u = rng.uniform(0.01, 0.99, size=(10, d))
            y = np.column_stack([glmga_quantile(u[:, j], p.margin(j)) for j in range(d)])
            ref = mgl_pdf(y, p) / np.prod([glmga_pdf(y[:, j], p.margin(j))
                                           for j in range(d)], axis=0)
            np.testing.assert_allclose(mgl_copula_pdf(u, 1 / p.a), ref, rtol=1e-8)


@pytest.mark.criterion(3)
def test_c3_h_functions_are_partial_derivatives():
    g = np.linspace(0.1, 0.9, 5)
    eps = 1e-5
    for delta in (0.1, 1.0, 5.0):
        for ug in g:
            for ut in g:
                fd = (mgl_copula_cdf(np.array([ug + eps, ut]), delta)
                      - mgl_copula_cdf(np.array([ug - eps, ut]), delta)) / (2 * eps)
                assert abs(h_forward(ut, ug, delta) - fd) < 1e-5
                fd = (surv_mgl_cdf(np.array([ug + eps, ut]), delta)
                      - surv_mgl_cdf(np.array([ug - eps, ut]), delta)) / (2 * eps)
                assert abs(surv_h_forward(ut, ug, delta) - fd) < 1e-5


@pytest.mark.criterion(3)
def test_c3_h_inverse_identity():
    g = (np.arange(20) + 0.5) / 20
    W, G = np.meshgrid(g, g)
    for delta in (0.1, 1.0, 5.0):
        assert np.max(np.abs(h_forward(h_inverse(W, G, delta), G, delta) - W)) < 1e-8
        assert np.max(np.abs(surv_h_forward(surv_h_inverse(W, G, delta), G, delta) - W)) < 1e-8


@pytest.mark.criterion(3)
def test_c3_survival_mgl_equals_mgb2_at_q_delta():
    # identity as stated: p_i = 1/2 and q = delta, at delta away from 1
    rng = np.random.default_rng(33)
    u = rng.uniform(0.01, 0.99, size=(20, 2))
    for delta in (0.5, 1.0, 2.0):
        np.testing.assert_allclose(surv_mgl_pdf(u, delta), mgb2_pdf(u, 0.5, delta), rtol=1e-10)


# -- 4 --------------------------------------------------------------------------

@pytest.mark.criterion(4)
def test_c4_sampler_validity():
    start = time.perf_counter()
    for i, delta in enumerate((0.1, 1.0, 5.0)):
        s = sample_mgl_copula(delta, 2, 100_000, seed=40 + i)
        for j in range(2):
            assert stats.kstest(s.values[:, j], "uniform").statistic < 0.005
        tau = stats.kendalltau(s.values[:, 0], s.values[:, 1])[0]
        assert abs(tau - kendall_tau(delta)) < 0.01
    assert time.perf_counter() - start < 30.0


# -- 5 --------------------------------------------------------------------------

@pytest.mark.criterion(5)
@pytest.mark.parametrize("delta", [1.0, 2.0])
def test_c5_domain_of_attraction(delta):
    s = 1e-5
    for u1, u2 in [(1.0, 1.0), (0.5, 1.0), (1.0, 0.2), (2.0, 0.7), (0.3, 0.3)]:
        # s^-1 (1 - Cbar(1 - s u)) = u1 + u2 - C(s u) / s
        lhs = u1 + u2 - float(mgl_copula_cdf(np.array([s * u1, s * u2]), delta)) / s
        assert abs(lhs - float(stable_tail_l(np.array([u1, u2]), delta))) < 1e-3


@pytest.mark.criterion(5)
def test_c5_max_stability():
    rng = np.random.default_rng(5)
    u = rng.uniform(0.01, 0.99, size=(200, 2))
    for delta in (0.655, 1.0, 3.0):
        for k in (2, 5):
            lhs = ev_cdf(u[:, 0] ** (1 / k), u[:, 1] ** (1 / k), delta) ** k
            assert np.max(np.abs(lhs - ev_cdf(u[:, 0], u[:, 1], delta))) < 1e-8


@pytest.mark.criterion(5)
def test_c5_pickands_shape():
    w = np.linspace(0, 1, 1000)
    for delta in (0.1, 0.655, 1.0, 5.0):
        A = pickands_A(w, delta)
        assert np.all(A <= 1 + 1e-15) and np.all(A >= np.maximum(w, 1 - w) - 1e-15)
        assert np.all(np.diff(A, 2) >= -1e-12)


# -- 6 --------------------------------------------------------------------------

@pytest.mark.criterion(6)
@pytest.mark.parametrize("d", [2, 10])
def test_c6_gradient(d):
    rng = np.random.default_rng(60 + d)
    n = 200
    X = np.column_stack([np.ones(n), rng.standard_normal((n, 2))])
    beta = rng.uniform(-0.4, 0.4, 3)
    u = sample_mgl_copula(np.exp(X @ beta), d, n, seed=d, survival=True)
    g = grad_surv_mgl_reg(u, X, beta)
    h = 1e-5
    fd = np.array([(loglik_surv_mgl_reg(u, X, beta + h * e) - loglik_surv_mgl_reg(u, X, beta - h * e))
                   / (2 * h) for e in np.eye(3)])
    assert np.all(np.abs(g - fd) <= 1e-5 * np.abs(fd))


# -- 7 --------------------------------------------------------------------------

@pytest.mark.criterion(7)
@pytest.mark.slow
def test_c7_simulation_study():
    start = time.perf_counter()
    cfg = load_scenario("d2")
    assert cfg["replicates"] == 200 and cfg["n_grid"] == [100, 500, 1000] and cfg["d"] == 2
    out = simstudy(cfg, seed=7)
    rows = {(r["n"], r["coef"]): r for r in out["rows"]}
    for h, true in enumerate(cfg["beta"]):
        assert rows[(1000, h)]["mse"] < rows[(100, h)]["mse"]
        big = rows[(1000, h)]
        assert abs(big["median"] - true) < 2 * big["mc_se_median"]
    assert time.perf_counter() - start < 600


# -- 8 / 9: published data --------------------------------------------------------

def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _danish(path):
    rows = _read_csv(path)
    keep = [r for r in rows if float(r["Building"]) > 0 and float(r["Contents"]) > 0]
    y = np.log(np.array([[float(r["Building"]), float(r["Contents"])] for r in keep]))
    year = np.array([float(r["Year"]) if "Year" in r else float(r["Date"][:4]) for r in keep])
    return kernel_pseudo_obs(y, 0.2), year


@pytest.mark.criterion(8)
@pytest.mark.data
def test_c8_danish(danish_path):
    u, year = _danish(danish_path)
    assert len(u) == 1502
    ones = np.ones((len(u), 1))
    fit = fit_copula_reg(u, ones)
    assert fit.fitted_delta[0] == pytest.approx(0.892, abs=0.02)
    assert fit.loglik == pytest.approx(115.97, abs=0.5)
    ev = fit_copula_reg(u, ones, "surv_mgl_ev")
    assert ev.fitted_delta[0] == pytest.approx(0.655, abs=0.02)
    spline = fit_copula_reg(u, ns_basis(year, quantile_knots(year, [0.5])))
    assert spline.loglik == pytest.approx(116.69, abs=0.5)
    rho = tw_dep_model(CopulaSpec("surv_mgl", fit.fitted_delta[0]).cdf, TailWeightConfig(6, 0.5))
    assert rho == pytest.approx(0.429, abs=0.02)


@pytest.mark.criterion(9)
@pytest.mark.data
def test_c9_earthquake(quake_path):
    rows = _read_csv(quake_path)
    loss = np.array([float(r["Loss"]) for r in rows])
    cas = np.array([float(r["Casualties"]) for r in rows])
    year = np.array([float(r["Year"]) for r in rows])
    g = glmga_fit(loss)
    assert g.params.sigma == pytest.approx(0.820, abs=0.02)
    assert g.loglik == pytest.approx(-1871.01, abs=0.5)
    sp = spliced_fit(cas, 20)
    assert sp.margin.lam == pytest.approx(37.42, abs=0.5)
    assert sp.margin.phi == pytest.approx(5.45, abs=0.3)
    _, joint = ifm_fit(loss, cas, threshold=20)
    assert joint.fitted_delta[0] == pytest.approx(2.763, abs=0.05)
    assert joint.loglik + g.loglik + sp.loglik == pytest.approx(-3009.46, abs=1)
    X = ns_basis(year, quantile_knots(year, [1 / 3, 2 / 3]))
    _, reg = ifm_fit(loss, cas, X, threshold=20)
    assert reg.loglik + g.loglik + sp.loglik == pytest.approx(-3002.22, abs=1)


# -- 10 -------------------------------------------------------------------------

@pytest.mark.criterion(10)
def test_c10_data_free_suite():
    # runs last: every non-data test collected in this session must have passed
    failed = session_failures()
    assert session_elapsed() < 15 * 60
    assert not failed, f"failing data-free tests: {failed}"
