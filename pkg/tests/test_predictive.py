"""Quadrature predictive mass functions and log predictive scores."""

import numpy as np
from scipy.stats import binom, nbinom, poisson

from ullgm.chain import DrawStore
from ullgm.core import BIL, PLN, nbl
from ullgm.likelihoods import log_pmf
from ullgm.predictive import (
    LOG_PMF_FLOOR,
    ZApproxMoments,
    approx_z_moments,
    log_predictive_draws,
    lps,
    per_point_log_predictive,
    predictive_pmf,
)


def test_sigma_zero_collapses_to_plain_families():
    lin = 0.8
    tiny = 1e-14
    y = np.arange(0, 25, dtype=float)
    for yi in y:
        got = np.exp(
            log_predictive_draws(
                yi, None, np.array([lin]), np.array([tiny]), PLN
            )
        )[0]
        np.testing.assert_allclose(got, poisson.pmf(yi, np.exp(lin)), rtol=1e-6)
    for yi in range(11):
        got = np.exp(
            log_predictive_draws(
                float(yi), 10.0, np.array([lin]), np.array([tiny]), BIL
            )
        )[0]
        want = binom.pmf(yi, 10, 1 / (1 + np.exp(-lin)))
        np.testing.assert_allclose(got, want, rtol=1e-6)
    fam = nbl(3)
    for yi in range(15):
        got = np.exp(
            log_predictive_draws(
                float(yi), None, np.array([lin]), np.array([tiny]), fam
            )
        )[0]
        # success prob expit(lin) plays the nbinom role with n = r
        want = nbinom.pmf(yi, 3, 1 / (1 + np.exp(-lin)))
        np.testing.assert_allclose(got, want, rtol=1e-6)


def test_quadrature_matches_monte_carlo_mixture():
    rng = np.random.default_rng(0)
    lin, s2 = 0.5, 0.5
    zs = lin + rng.normal(scale=np.sqrt(s2), size=10**6)
    for fam, tr, ys in ((PLN, None, (0, 1, 3, 8)), (BIL, 12.0, (0, 4, 12)), (nbl(2), None, (0, 2, 6))):
        for yi in ys:
            mc = np.exp(log_pmf(fam, float(yi), zs, trials=tr)).mean()
            mc_se = np.exp(log_pmf(fam, float(yi), zs, trials=tr)).std() / 1000.0
            got = np.exp(
                log_predictive_draws(
                    float(yi), tr, np.array([lin]), np.array([s2]), fam
                )
            )[0]
            assert abs(got - mc) < 4 * mc_se + 1e-9, (fam.name, yi, got, mc)


def test_predictive_sums_to_one():
    # bil over its full support, count families far into the tail
    probs = [
        np.exp(log_predictive_draws(float(yi), 8.0, np.array([0.3]), np.array([0.4]), BIL))[0]
        for yi in range(9)
    ]
    np.testing.assert_allclose(sum(probs), 1.0, atol=1e-10)
    tot = sum(
        np.exp(log_predictive_draws(float(yi), None, np.array([1.0]), np.array([0.3]), PLN))[0]
        for yi in range(400)
    )
    np.testing.assert_allclose(tot, 1.0, atol=1e-6)


def test_predictive_pmf_applies_centering():
    # a model draw scores a new point through the centered design
    x_new = np.array([2.0, -1.0])
    col_means = np.array([1.5, 0.5])
    beta = np.array([0.7, -0.2])
    alpha, sigma2 = 0.9, 0.25
    lin = alpha + (x_new - col_means) @ beta
    direct = np.exp(
        log_predictive_draws(3.0, None, np.array([lin]), np.array([sigma2]), PLN)
    )[0]
    got = predictive_pmf(3.0, x_new, alpha, beta, sigma2, PLN, col_means)
    np.testing.assert_allclose(got, direct, rtol=1e-12)


def test_moment_matching_anchors():
    m = approx_z_moments(5.0, None, 0.2, 0.3, PLN)
    assert np.isfinite(m.m) and m.s > 0
    # zero counts anchor at half a count rather than log 0
    m0 = approx_z_moments(0.0, None, 0.2, 0.3, PLN)
    assert np.isfinite(m0.m) and m0.s > 0
    mb = approx_z_moments(0.0, 10.0, 0.0, 0.5, BIL)
    assert np.isfinite(mb.m)
    mt = approx_z_moments(10.0, 10.0, 0.0, 0.5, BIL)
    assert np.isfinite(mt.m)
    mn = approx_z_moments(4.0, None, 0.1, 0.2, nbl(2))
    assert np.isfinite(mn.m) and mn.s > 0


def test_far_tail_hits_floor_and_flags():
    draws = DrawStore(
        alpha=np.array([-5.0]),
        sigma2=np.array([1e-4]),
        g=np.array([10.0]),
        included=np.zeros((1, 2), dtype=bool),
        beta=np.zeros((1, 2)),
        z=None,
    )
    from ullgm.core import Dataset

    holdout = Dataset(y=[5000.0, 1.0], X=np.zeros((2, 2)), family=PLN)
    logp, floored = per_point_log_predictive(holdout, draws, np.zeros(2))
    assert floored[0] and not floored[1]
    np.testing.assert_allclose(logp[0], LOG_PMF_FLOOR, rtol=1e-12)
    assert logp[1] > LOG_PMF_FLOOR


def test_lps_averages_over_draws_before_logging():
    rng = np.random.default_rng(1)
    S, p = 40, 2
    incl = np.ones((S, p), dtype=bool)
    draws = DrawStore(
        alpha=rng.normal(0.5, 0.2, size=S),
        sigma2=np.full(S, 0.3),
        g=np.full(S, 20.0),
        included=incl,
        beta=rng.normal(0.0, 0.1, size=(S, p)),
        z=None,
    )
    from ullgm.core import Dataset

    X = rng.normal(size=(6, p))
    y = rng.poisson(2.0, size=6).astype(float)
    holdout = Dataset(y=y, X=X, family=PLN)
    col_means = np.zeros(p)
    logp, _ = per_point_log_predictive(holdout, draws, col_means)
    got = lps(holdout, draws, col_means)
    np.testing.assert_allclose(got, -logp.mean(), rtol=1e-12)
    # Jensen: averaging pmfs then logging beats logging per draw
    per_draw = np.zeros(6)
    for i in range(6):
        vals = np.array(
            [
                np.log(
                    predictive_pmf(
                        y[i], X[i], draws.alpha[s], draws.beta[s],
                        draws.sigma2[s], PLN, col_means,
                    )
                )
                for s in range(S)
            ]
        )
        per_draw[i] = vals.mean()
    assert got <= -per_draw.mean() + 1e-12


def test_single_draw_lps_is_minus_log_pmf():
    draws = DrawStore(
        alpha=np.array([0.4]),
        sigma2=np.array([0.2]),
        g=np.array([5.0]),
        included=np.ones((1, 1), dtype=bool),
        beta=np.array([[0.3]]),
        z=None,
    )
    from ullgm.core import Dataset

    X = np.array([[1.0]])
    holdout = Dataset(y=[2.0], X=X, family=PLN)
    want = -np.log(
        predictive_pmf(2.0, X[0], 0.4, np.array([0.3]), 0.2, PLN, np.zeros(1))
    )
    np.testing.assert_allclose(lps(holdout, draws, np.zeros(1)), want, rtol=1e-12)
