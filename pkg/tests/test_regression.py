from __future__ import annotations

import math

import mpmath as mp
import numpy as np
import pytest

import oracles
from catoni_alpha.errors import DomainError
from catoni_alpha.regression import (
    GaussianDesignLaw,
    OptimizerBudget,
    ParetoNoise,
    ProblemMoments,
    RegressionProblem,
    RiskConfig,
    StudentTNoise,
    covering_number_log,
    excess_l1_risk,
    excess_risk_bound,
    minimize_truncated_risk,
    regression_law_from_json,
    true_l1_risk,
    truncated_risk,
    tune_beta_regression,
)

LAW = GaussianDesignLaw((0.5, -0.3), StudentTNoise(1.75))


def test_risk_perfect_fit_is_zero():
    xs = np.random.default_rng(0).standard_normal((30, 2))
    prob = RegressionProblem(xs, xs @ np.array([0.2, 0.1]), 1.0)
    assert truncated_risk([0.2, 0.1], prob, 0.3, 1.5) == pytest.approx(0.0, abs=1e-15)


def test_risk_single_point():
    prob = RegressionProblem([[1.0]], [1.0], 1.0)
    assert truncated_risk([0.0], prob, 1.0, 1.5) == pytest.approx(float(oracles.phi(1.0, 1.5)), rel=1e-15)


def test_risk_scale_invariance():
    # (x, y, beta) -> (lam x, lam y, beta / lam) keeps the minimizer and scales the risk by lam
    rng = np.random.default_rng(1)
    xs, ys = LAW.sample(rng, 300)
    theta = np.array([0.3, -0.2])
    lam = 3.5
    a = truncated_risk(theta, RegressionProblem(xs, ys, 1.0), 0.2, 1.5)
    b = truncated_risk(theta, RegressionProblem(lam * xs, lam * ys, 1.0), 0.2 / lam, 1.5)
    assert b == pytest.approx(lam * a, rel=1e-13)
    fit_a = minimize_truncated_risk(RegressionProblem(xs, ys, 1.0), RiskConfig(1.5, 0.2, 0.1, 0.01))
    fit_b = minimize_truncated_risk(RegressionProblem(lam * xs, lam * ys, 1.0), RiskConfig(1.5, 0.2 / lam, 0.1, 0.01))
    np.testing.assert_allclose(fit_a.theta, fit_b.theta, atol=1e-7)


def test_risk_dimension_checks():
    prob = RegressionProblem(np.ones((3, 2)), np.ones(3), 1.0)
    with pytest.raises(DomainError):
        truncated_risk([1.0], prob, 0.3, 1.5)
    with pytest.raises(DomainError):
        RegressionProblem(np.ones((3, 2)), np.ones(4), 1.0)
    with pytest.raises(DomainError):
        RegressionProblem(np.ones((3, 2)), np.ones(3), 0.0)


def test_noiseless_recovery():
    x = np.linspace(-2, 2, 41)
    fit = minimize_truncated_risk(RegressionProblem(x, 2 * x, 3.0), RiskConfig(1.5, 0.5, 0.1, 0.01))
    assert fit.theta[0] == pytest.approx(2.0, abs=1e-8)
    assert fit.converged


def test_solution_stays_in_ball():
    x = np.linspace(-2, 2, 41)
    fit = minimize_truncated_risk(RegressionProblem(x, 2 * x, 1.0), RiskConfig(1.5, 0.5, 0.1, 0.01))
    assert abs(fit.theta[0]) <= 1.0 + 1e-12
    assert fit.theta[0] == pytest.approx(1.0, abs=1e-8)


def test_recovers_planted_parameter():
    prob = LAW.problem(np.random.default_rng(2), 2000, 1.0)
    cfg = RiskConfig.tuned(1.5, 2000, 2, 1.0, 0.1)
    fit = minimize_truncated_risk(prob, cfg)
    assert np.linalg.norm(fit.theta - np.array(LAW.theta_star)) < 0.1


@pytest.mark.parametrize("seed", range(3))
def test_grid_oracle_agreement(seed):
    prob = LAW.problem(np.random.default_rng(100 + seed), 500, 1.0)
    cfg = RiskConfig.tuned(1.5, 500, 2, 1.0, 0.1)
    fit = minimize_truncated_risk(prob, cfg)
    theta_g, val_g, h = oracles.grid_minimize_ball2(prob.xs, prob.ys, cfg.beta, 1.5, 1.0, points_per_radius=100)
    assert fit.value <= val_g + 1e-12
    assert np.linalg.norm(fit.theta - theta_g) <= 2 * h


def test_budget_exhaustion_reported():
    prob = LAW.problem(np.random.default_rng(3), 200, 1.0)
    fit = minimize_truncated_risk(prob, RiskConfig(1.5, 0.3, 0.1, 0.01), OptimizerBudget(max_evals=5))
    assert not fit.converged
    assert np.linalg.norm(fit.theta) <= 1.0 + 1e-12


# covering, tuning, certificate


def test_covering_examples():
    assert covering_number_log(1, 1.0, 6.0) == 0.0
    assert covering_number_log(3, 2.0, 1.0) == pytest.approx(3 * math.log(12), rel=1e-15)
    with pytest.raises(DomainError):
        covering_number_log(0, 1.0, 1.0)


def test_beta_examples():
    for n in (10, 2000):
        assert tune_beta_regression(n, 0.0, math.exp(-1), 1.5) == pytest.approx((2 / n) ** (1 / 1.5), rel=1e-14)
    cov = covering_number_log(2, 1.0, 1 / 2000)
    want = oracles.tune_beta_regression(2000, oracles.covering_log(2, 1.0, 1 / 2000), 0.1, 1.5)
    assert tune_beta_regression(2000, cov, 0.1, 1.5) == pytest.approx(float(want), rel=1e-14)


def test_certificate_value_and_parts():
    moments = ProblemMoments(1.25, 1.5, 4.0, "synthetic")
    cfg = RiskConfig.tuned(1.5, 2000, 2, 1.0, 0.1)
    cert = excess_risk_bound(moments, cfg, 2000, 2, 1.0)
    want = oracles.excess_risk_bound(1.25, 1.5, 4.0, 1.5, 0.1, 1 / 2000, 2000, 2, 1.0)
    assert cert.bound_value == pytest.approx(float(want), rel=1e-14)
    assert sum(cert.components.values()) == pytest.approx(cert.bound_value, rel=1e-15)
    assert cert.failure_budget == pytest.approx(0.2)
    assert cert.beta == pytest.approx(cfg.beta)
    assert math.isfinite(cert.bound_value) and cert.bound_value > 0


def test_certificate_order():
    moments = ProblemMoments(1.25, 1.5, 4.0)

    def bound(n):
        return excess_risk_bound(moments, RiskConfig.tuned(1.5, n, 2, 1.0, 0.1), n, 2, 1.0).bound_value

    assert bound(100_000) / bound(1_600_000) == pytest.approx(16 ** (1 / 3), rel=0.10)


def test_missing_moments_rejected():
    with pytest.raises(DomainError):
        ProblemMoments(1.0, float("nan"), 1.0)
    with pytest.raises(DomainError):
        excess_risk_bound(None, RiskConfig(1.5, 0.1, 0.1, 0.01), 100, 2, 1.0)


# synthetic laws


def _t_density(z, df):
    return mp.gamma((df + 1) / 2) / (mp.sqrt(df * mp.pi) * mp.gamma(df / 2)) * (1 + z**2 / df) ** (-(df + 1) / 2)


def test_noise_moments():
    t = StudentTNoise(1.75)
    df = mp.mpf("1.75")
    for p in (1.0, 1.5):
        want = 2 * mp.quad(lambda z: z**p * _t_density(z, df), [0, 1, 100, mp.inf])
        assert t.abs_moment(p) == pytest.approx(float(want), rel=1e-10)
    with pytest.raises(DomainError):
        t.abs_moment(1.75)
    # sampler: |Z| has infinite variance, so compare a finite-variance truncated moment
    z = np.abs(t.sample(np.random.default_rng(5), 2_000_000))
    c = 30.0
    trunc = np.where(z <= c, z, 0.0)
    want = float(2 * mp.quad(lambda u: u * _t_density(u, df), [0, 1, c]))
    assert abs(trunc.mean() - want) <= 4 * trunc.std(ddof=1) / math.sqrt(z.size)
    p = ParetoNoise(1.5, 2.0)
    assert p.abs_moment(1.5) == pytest.approx(2.0**1.5, rel=1e-13)


def test_design_moments():
    m = LAW.moments(1.5, 1.0)
    xs = np.random.default_rng(6).standard_normal((2_000_000, 2))
    norms = np.linalg.norm(xs, axis=1)
    assert m.E_abs_x == pytest.approx(math.sqrt(math.pi / 2), rel=1e-14)
    assert m.E_abs_x_alpha == pytest.approx(np.mean(norms**1.5), rel=3e-3)
    assert m.sup_R_alpha > LAW.l_alpha_risk_star(1.5)


def test_l1_risk_quadrature_matches_monte_carlo():
    thetas = np.array([[0.5, -0.3], [0.7, -0.1], [0.0, 0.0]])
    quad = true_l1_risk(thetas, LAW)
    mc = true_l1_risk(thetas, LAW, n_mc=2_000_000, seed=1)
    diff_q = quad.value - quad.value[0]
    diff_mc = mc.value - mc.value[0]
    np.testing.assert_allclose(diff_mc, diff_q, atol=0.01)
    ex = excess_l1_risk([0.7, -0.1], LAW, n_mc=2_000_000, seed=1)
    assert float(ex.value) == pytest.approx(diff_q[1], abs=4 * float(ex.stderr) + 1e-3)
    assert float(excess_l1_risk(LAW.theta_star, LAW).value) == 0.0


def test_l1_risk_minimized_at_truth():
    base = LAW.l1_risk(LAW.theta_star)
    for t in ([0.51, -0.3], [0.5, -0.29], [0.0, 0.0]):
        assert LAW.l1_risk(t) > base


class _TwoPoint:
    def sample(self, rng, size):
        return rng.choice([-1.0, 1.0], size)


def test_two_point_noise_risk():
    law = GaussianDesignLaw((0.2,), _TwoPoint())
    est = true_l1_risk(law.theta_star, law, n_mc=10_000, seed=0)
    assert float(est.value[0]) == 1.0


def test_law_json_round_trip():
    law = GaussianDesignLaw((0.1, 0.2, 0.3), ParetoNoise(1.6, 0.5))
    assert regression_law_from_json(law.to_json()) == law
    with pytest.raises(DomainError):
        regression_law_from_json({"kind": "gaussian_design", "theta_star": [0.0]})
