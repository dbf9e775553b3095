import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special, stats

from mglcop.copula import (gumbel_cdf, gumbel_h, gumbel_pdf, h_forward, h_inverse, kendall_tau,
                           mgb2_pdf, mgl_copula_cdf, mgl_copula_pdf, sample_mgl_copula,
                           spearman_rho, surv_h_forward, surv_h_inverse, surv_mgl_cdf,
                           surv_mgl_pdf, t_fn, tail_dependence)
from mglcop.errors import DimensionError, DomainError
from mglcop.glmga import glmga_pdf, glmga_quantile
from mglcop.mgl import MglParams, mgl_pdf


def _bivariate_density(u1, u2, a):
    # c(u) = G(a) G(a+1) / G(a+1/2)^2 * prod y_j^-(a+1/2) * (1 + t1 + t2)^-(a+1)
    def odds(u):
        x = special.betaincinv(0.5, a, 1 - u)
        return x / (1 - x), 1 - x
    t1, y1 = odds(u1)
    t2, y2 = odds(u2)
    logc = (special.gammaln(a) + special.gammaln(a + 1) - 2 * special.gammaln(a + 0.5)
            - (a + 0.5) * (np.log(y1) + np.log(y2)) - (a + 1) * np.log1p(t1 + t2))
    return np.exp(logc)


def test_t_fn():
    assert t_fn(0.5, 1.0) == pytest.approx(1 / 3, rel=1e-14)
    assert t_fn(1 - 1e-10, 1.0) < 1e-9
    grid = np.linspace(0.005, 0.995, 100)
    assert np.all(np.diff(t_fn(grid, 0.7)) < 0)


@pytest.mark.parametrize("delta", [0.1, 1.0, 7.0])
def test_cdf_boundaries(delta):
    for u in (0.1, 0.5, 0.9):
        assert mgl_copula_cdf(np.array([u, 1.0]), delta) == pytest.approx(u, abs=1e-8)
        assert mgl_copula_cdf(np.array([1.0, u]), delta) == pytest.approx(u, abs=1e-8)
    assert mgl_copula_cdf(np.array([0.0, 0.4]), delta) == 0.0


def test_cdf_matches_density_integral():
    val, _ = integrate.dblquad(lambda v, u: _bivariate_density(u, v, 1.0), 0, 0.5, 0, 0.5,
                               epsabs=1e-11, epsrel=1e-11)
    assert mgl_copula_cdf(np.array([0.5, 0.5]), 1.0) == pytest.approx(val, abs=1e-6)


def test_cdf_frechet_bounds_and_d3():
    rng = np.random.default_rng(0)
    u = rng.uniform(size=(200, 3))
    c = mgl_copula_cdf(u, 0.8)
    assert np.all(c <= u.min(axis=1) + 1e-12)
    assert np.all(c >= np.maximum(u.sum(axis=1) - 2, 0) - 1e-12)
    # integrating out the third coordinate gives the bivariate cdf
    u3 = np.column_stack([u[:, :2], np.ones(200)])
    np.testing.assert_allclose(mgl_copula_cdf(u3, 0.8), mgl_copula_cdf(u[:, :2], 0.8), atol=1e-10)


def test_density_values():
    assert mgl_copula_pdf(np.array([0.5, 0.5]), 1.0) == pytest.approx(1.0864977, rel=1e-6)
    assert mgl_copula_pdf(np.array([0.3, 0.7]), 1e-4) == pytest.approx(1.0, abs=1e-2)
    rng = np.random.default_rng(1)
    u = rng.uniform(0.01, 0.99, size=(10, 2))
    for delta in (0.3, 2.0):
        np.testing.assert_allclose(mgl_copula_pdf(u, delta),
                                   _bivariate_density(u[:, 0], u[:, 1], 1 / delta), rtol=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_density_sklar_factorization(d):
    rng = np.random.default_rng(d)
    for _ in range(5):
        p = MglParams(tuple(rng.uniform(0.2, 1.5, d)), rng.uniform(0.3, 3.0),
                      tuple(rng.uniform(0.2, 3.0, d)))
        u = rng.uniform(0.02, 0.98, size=(8, d))
        y = np.column_stack([glmga_quantile(u[:, j], p.margin(j)) for j in range(d)])
        ref = mgl_pdf(y, p) / np.prod([glmga_pdf(y[:, j], p.margin(j)) for j in range(d)], axis=0)
        np.testing.assert_allclose(mgl_copula_pdf(u, 1 / p.a), ref, rtol=1e-8)


def test_density_margin_integrates_to_one():
    val, _ = integrate.quad(lambda v: mgl_copula_pdf(np.array([0.4, v]), 0.5), 0, 1,
                            epsabs=1e-12, limit=200)
    assert val == pytest.approx(1.0, abs=1e-5)


def test_survival_reflection_and_cdf():
    rng = np.random.default_rng(3)
    u = rng.uniform(0.01, 0.99, size=(20, 2))
    np.testing.assert_allclose(surv_mgl_pdf(u, 1.3), mgl_copula_pdf(1 - u, 1.3), rtol=1e-10)
    ref = u.sum(axis=1) - 1 + mgl_copula_cdf(1 - u, 1.3)
    np.testing.assert_allclose(surv_mgl_cdf(u, 1.3), ref, atol=1e-12)


def test_mgb2_reduction():
    rng = np.random.default_rng(4)
    u = rng.uniform(0.01, 0.99, size=(25, 3))
    for delta in (0.4, 1.0, 3.0):
        # the survival MGL copula is MGB2 with p_i = 1/2 and q = 1/delta
        np.testing.assert_allclose(surv_mgl_pdf(u, delta), mgb2_pdf(u, 0.5, 1 / delta), rtol=1e-10)


def test_mgb2_limits():
    assert mgb2_pdf(np.array([0.3, 0.7]), [0.8, 1.4], 1e4) == pytest.approx(1.0, abs=0.05)
    val, _ = integrate.quad(lambda v: mgb2_pdf(np.array([0.4, v]), [0.8, 1.4], 1.7), 0, 1,
                            epsabs=1e-12, limit=200)
    assert val == pytest.approx(1.0, abs=1e-5)


def test_h_forward_values():
    expected = 1 - 2 / math.pi * (math.asin(math.sqrt(0.2)) + math.sqrt(0.2 * 0.8))
    assert h_forward(0.5, 0.5, 1.0) == pytest.approx(expected, abs=1e-12)
    assert h_forward(1.0, 0.3, 1.0) == pytest.approx(1.0, abs=1e-8)
    assert h_inverse(expected, 0.5, 1.0) == pytest.approx(0.5, abs=1e-10)


def test_h_matches_numeric_derivative():
    g = np.linspace(0.1, 0.9, 5)
    eps = 1e-5
    for delta in (0.5, 2.0):
        for ug in g:
            for ut in g:
                fd = (mgl_copula_cdf(np.array([ug + eps, ut]), delta)
                      - mgl_copula_cdf(np.array([ug - eps, ut]), delta)) / (2 * eps)
                assert h_forward(ut, ug, delta) == pytest.approx(fd, abs=1e-5)
                fd = (surv_mgl_cdf(np.array([ug + eps, ut]), delta)
                      - surv_mgl_cdf(np.array([ug - eps, ut]), delta)) / (2 * eps)
                assert surv_h_forward(ut, ug, delta) == pytest.approx(fd, abs=1e-5)


@pytest.mark.parametrize("delta", [0.1, 1.0, 5.0])
def test_h_roundtrip_grid(delta):
    g = (np.arange(20) + 0.5) / 20
    W, G = np.meshgrid(g, g)
    np.testing.assert_allclose(h_forward(h_inverse(W, G, delta), G, delta), W, atol=1e-8)
    np.testing.assert_allclose(surv_h_forward(surv_h_inverse(W, G, delta), G, delta), W, atol=1e-8)
    assert np.all(np.diff(h_inverse(g, 0.3, delta)) > 0)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 1 - 1e-3), st.floats(1e-3, 1 - 1e-3), st.floats(0.05, 20))
def test_h_is_conditional_cdf(w, ug, delta):
    u = h_inverse(w, ug, delta)
    assert 0 < u < 1
    assert h_forward(u, ug, delta) == pytest.approx(w, abs=1e-8)


def test_h_direction_validation():
    with pytest.raises(DomainError):
        h_forward(0.5, 0.5, 1.0, direction="3|1")


@pytest.mark.parametrize("delta", [0.1, 1.0, 5.0])
def test_sampler_uniform_margins_and_tau(delta):
    s = sample_mgl_copula(delta, 2, 100_000, seed=10)
    assert s.method == "parametric"
    for j in range(2):
        assert stats.kstest(s.values[:, j], "uniform").statistic < 0.005
    tau = stats.kendalltau(s.values[:20000, 0], s.values[:20000, 1])[0]
    assert tau == pytest.approx(kendall_tau(delta), abs=0.01)


def test_sampler_density_check_d3():
    s = sample_mgl_copula(0.7, 3, 50_000, seed=2)
    # mean log density is the KL divergence to independence, estimated two ways
    cell = np.mean(mgl_copula_pdf(s.values, 0.7) > 0)
    assert cell == 1.0
    tau = stats.kendalltau(s.values[:10000, 0], s.values[:10000, 2])[0]
    assert tau == pytest.approx(kendall_tau(0.7), abs=0.02)


def test_sampler_tail_clustering():
    s = sample_mgl_copula(1.0, 2, 10 ** 6, seed=4, survival=True)
    ratio = np.mean((s.values > 0.999).all(axis=1)) / 0.001
    assert ratio == pytest.approx(tail_dependence(1.0)[0], abs=0.05)
    lower = np.mean((s.values < 0.001).all(axis=1)) / 0.001
    assert lower < 0.05


def test_sampler_determinism_and_per_row_delta():
    a = sample_mgl_copula(1.0, 2, 500, seed=5)
    b = sample_mgl_copula(1.0, 2, 500, seed=5)
    np.testing.assert_array_equal(a.values, b.values)
    rows = sample_mgl_copula(np.full(500, 1.0), 2, 500, seed=5)
    np.testing.assert_array_equal(a.values, rows.values)


def test_tau_and_rho():
    assert kendall_tau(1e-4) < 1e-3
    taus = [kendall_tau(d) for d in (0.1, 0.5, 1.0, 2.0, 5.0)]
    assert np.all(np.diff(taus) > 0)
    rhos = [spearman_rho(d) for d in (0.1, 1.0, 5.0)]
    assert np.all(np.diff(rhos) > 0)
    s = sample_mgl_copula(1.0, 2, 10 ** 6, seed=8)
    # Spearman's rho of the sample (exact ranks, cheap at this size)
    assert stats.spearmanr(s.values[:, 0], s.values[:, 1])[0] == pytest.approx(spearman_rho(1.0),
                                                                              abs=0.005)
    assert stats.kendalltau(s.values[:100_000, 0], s.values[:100_000, 1])[0] == pytest.approx(
        kendall_tau(1.0), abs=0.005)


def test_tail_dependence():
    lam, upper = tail_dependence(1.0)
    assert lam == pytest.approx(2 - 2 * (0.5 + 1 / math.pi), abs=1e-12)
    assert upper == 0.0
    assert tail_dependence(1e-4)[0] < 1e-3
    assert tail_dependence(1e6)[0] > 0.999


def test_gumbel():
    rng = np.random.default_rng(6)
    u = rng.uniform(0.01, 0.99, size=(50, 2))
    np.testing.assert_allclose(gumbel_pdf(u[:, 0], u[:, 1], 1.0), 1.0, rtol=1e-12)
    val, _ = integrate.dblquad(lambda v, w: gumbel_pdf(w, v, 2.0), 0, 1, 0, 1, epsabs=1e-9)
    assert val == pytest.approx(1.0, abs=1e-5)
    eps = 1e-6
    fd = (gumbel_cdf(0.4 + eps, 0.7, 1.5) - gumbel_cdf(0.4 - eps, 0.7, 1.5)) / (2 * eps)
    assert gumbel_h(0.7, 0.4, 1.5) == pytest.approx(fd, rel=1e-6)
    with pytest.raises(DomainError):
        gumbel_pdf(0.5, 0.5, 0.9)


def test_validation():
    with pytest.raises(DomainError):
        mgl_copula_cdf(np.array([0.5, 1.2]), 1.0)
    with pytest.raises(DomainError):
        mgl_copula_pdf(np.array([0.5, 0.5]), -1.0)
    with pytest.raises(DimensionError):
        mgl_copula_pdf(np.array([0.5]), 1.0)
