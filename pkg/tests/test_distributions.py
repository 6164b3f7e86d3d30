from __future__ import annotations

import json
import math

import mpmath as mp
import numpy as np
import pytest
from scipy import stats

import oracles
from catoni_alpha.bounds import empirical_mean_lower
from catoni_alpha.distributions import (
    SymmetricParetoLaw,
    WorstCaseLaw,
    law_from_json,
    open_uniform,
    verify_moments,
)
from catoni_alpha.errors import DomainError


def _worst():
    eta = empirical_mean_lower(1.5, 1.0, 100, 0.02)
    return WorstCaseLaw(1.5, 1.0, 100, eta, 1.75)


def test_open_uniform_range():
    u = open_uniform(np.random.default_rng(0), 100_000)
    assert u.min() > 0 and u.max() < 1


# symmetric Pareto


@pytest.mark.parametrize("alpha", [1.1, 1.5, 1.9])
def test_pareto_parameters(alpha):
    law = SymmetricParetoLaw(alpha)
    assert law.shape == pytest.approx((2 + alpha) / 2)
    assert law.survival(law.scale) == pytest.approx(0.5)
    x = law.scale * 3.0
    assert law.survival(x) == pytest.approx(law.tail_constant() * x ** (-law.shape), rel=1e-13)
    assert float(oracles.pareto_alpha_moment(alpha)) == pytest.approx(1.0, rel=1e-12)
    check = verify_moments(law)
    assert abs(check.alpha_moment_err) < 1e-13 and check.mean == 0.0


def test_pareto_cdf_ppf_round_trip():
    law = SymmetricParetoLaw(1.5)
    u = np.concatenate([np.linspace(1e-6, 0.499, 200), np.linspace(0.501, 1 - 1e-6, 200)])
    np.testing.assert_allclose(law.cdf(law.ppf(u)), u, rtol=1e-12)
    np.testing.assert_allclose(law.cdf(np.array([-law.scale, 0.0, law.scale * 2])) + law.survival(
        np.array([-law.scale, 0.0, law.scale * 2])), [1.0, 1.0, 1.0])


def test_pareto_pdf_integrates_to_cdf():
    law = SymmetricParetoLaw(1.5)
    a, b = law.scale, 7.0
    mass = mp.quad(lambda t: law.pdf(float(t)), [a, b])
    assert float(mass) == pytest.approx(law.cdf(b) - law.cdf(a - 1e-15), rel=1e-9)


def test_pareto_ks():
    law = SymmetricParetoLaw(1.5)
    x = law.sample(np.random.default_rng(1), 50_000)
    assert stats.kstest(x, law.cdf).pvalue > 1e-3


def test_pareto_sample_moments():
    law = SymmetricParetoLaw(1.5)
    x = law.sample(np.random.default_rng(2), 1_000_000)
    # self-normalized mean of a symmetric law
    assert abs(x.mean()) <= 4 * x.std(ddof=1) / math.sqrt(x.size)
    # E|X|**alpha has infinite variance; check the finite-variance truncated moment against its closed form
    c = 50.0
    k, s, a = law.shape, law.scale, 1.5
    trunc = np.where(np.abs(x) <= c, np.abs(x) ** a, 0.0)
    exact = k * s**k * (c ** (a - k) - s ** (a - k)) / (a - k)
    assert abs(trunc.mean() - exact) <= 4 * trunc.std(ddof=1) / math.sqrt(x.size)


def test_pareto_json_round_trip():
    law = SymmetricParetoLaw(1.5)
    assert law_from_json(json.loads(json.dumps(law.to_json()))) == law


# worst-case law


def test_worst_case_masses():
    law = _worst()
    m = law.masses()
    assert abs(sum(m.values()) - 1.0) <= 1e-14
    assert m["plus_atom"] == pytest.approx(law.v / (3 * law.n**law.alpha * law.eta**law.alpha), rel=1e-14)
    assert m["right_tail"] == pytest.approx(law.budget / 6, rel=1e-13)


def test_worst_case_closed_form_moments():
    law = _worst()
    a, g, p, q = law.alpha, law.gamma, law.p, law.q
    assert q * p ** (a - g) / (g - a) == pytest.approx(law.v / 3, rel=1e-13)
    check = verify_moments(law)
    assert abs(check.mean_err) <= 1e-14
    assert abs(check.alpha_moment_err) <= 1e-13


def test_worst_case_cdf_ppf_round_trip_on_continuous_bands():
    law = _worst()
    tail, b1, b2, b3, b4, b5, b6 = law._bands()
    pieces = [np.linspace(b1 * 1e-6, b1 * (1 - 1e-9), 50), np.linspace(b2 + 1e-12, b3 - 1e-12, 50),
              np.linspace(b4 + 1e-12, b5 - 1e-12, 50), np.linspace(b6 + 1e-12, 1 - 1e-9, 50)]
    for u in pieces:
        np.testing.assert_allclose(law.cdf(law.ppf(u)), u, rtol=1e-9, atol=1e-16)


def test_worst_case_generalized_inverse_at_atoms():
    law = _worst()
    _, b1, b2, b3, b4, b5, b6 = law._bands()
    assert law.ppf((b1 + b2) / 2) == -law.atom
    assert law.ppf((b3 + b4) / 2) == 0.0
    assert law.ppf((b5 + b6) / 2) == law.atom
    # F(ppf(u)) >= u everywhere
    u = np.linspace(1e-9, 1 - 1e-9, 20_001)
    assert np.all(law.cdf(law.ppf(u)) >= u - 1e-15)


def test_worst_case_atom_frequency():
    law = _worst()
    x = law.sample(np.random.default_rng(9), 4_000_000)
    freq = np.mean(x == law.atom)
    want = law.v / (3 * law.n**law.alpha * law.eta**law.alpha)
    assert abs(freq - want) <= 4 * math.sqrt(want * (1 - want) / x.size)


def test_worst_case_sample_moments():
    law = _worst()
    x = law.sample(np.random.default_rng(10), 4_000_000)
    assert abs(x.mean()) <= 4 * x.std(ddof=1) / math.sqrt(x.size)
    c = 20 * law.atom
    a, g, p, q = law.alpha, law.gamma, law.p, law.q
    trunc = np.where(np.abs(x) <= c, np.abs(x) ** a, 0.0)
    exact = 2 * law.budget / 3 * law.atom**a + q * (p ** (a - g) - c ** (a - g)) / (g - a)
    assert abs(trunc.mean() - exact) <= 4 * trunc.std(ddof=1) / math.sqrt(x.size)


def test_worst_case_validation():
    with pytest.raises(DomainError):
        WorstCaseLaw(1.5, 1.0, 100, 1e-3)  # mass budget above one
    with pytest.raises(DomainError):
        WorstCaseLaw(1.5, 1.0, 100, 1.0, gamma=1.4)
    with pytest.raises(DomainError):
        WorstCaseLaw(1.5, 1.0, 1, 1.0)
    assert WorstCaseLaw(1.5, 1.0, 100, 1.0).gamma == 1.75


def test_worst_case_json_round_trip():
    law = _worst()
    assert law_from_json(json.loads(json.dumps(law.to_json()))) == law
    with pytest.raises(DomainError):
        law_from_json({"kind": "worst_case", "alpha": 1.5})
    with pytest.raises(DomainError):
        law_from_json({"kind": "cauchy"})


def test_verify_moments_rejects_divergence():
    with pytest.raises(DomainError):
        verify_moments(SymmetricParetoLaw(1.5), alpha=1.8)
