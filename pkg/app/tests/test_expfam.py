# Native and installed modules
import math

import numpy as np
import pytest
from scipy import stats

# Custom modules
from core import expfam
from model.family import ExpFamilyModel
from utils.errors import ConfigError, DomainError

FAMILY_KEYS = ["gauss-mean", "gauss-var", "poisson", "bernoulli", "exponential"]


class ShiftedPoisson(ExpFamilyModel):
    """Poisson cumulant without closed-form inverse or stabilizer."""

    name = "ShiftedPoisson"
    lambda_domain = (0.0, math.inf)
    discrete = True

    def u_stat(self, x):
        return np.asarray(x, dtype=float)

    def cumulant(self, theta):
        return np.exp(theta)

    def mean(self, theta):
        return np.exp(theta)

    def fisher(self, theta):
        return np.exp(theta)

    def sample(self, theta, rng):
        return np.asarray(rng.poisson(np.exp(theta)), dtype=float)

    def quantile(self, theta, u):
        raise NotImplementedError


@pytest.fixture(params=FAMILY_KEYS)
def fam(request):
    return expfam.get_family(request.param)


def test_cumulant_values():
    assert expfam.cumulant(expfam.get_family("poisson"), 0.0) == pytest.approx(1.0)
    assert expfam.cumulant(expfam.get_family("gauss-mean"), 3.0) == pytest.approx(4.5)
    assert expfam.cumulant(expfam.get_family("bernoulli"), 0.0) == pytest.approx(math.log(2))
    assert expfam.mean_param(expfam.get_family("gauss-var"), -1.0) == pytest.approx(0.5)


def test_fisher_values():
    assert expfam.fisher_info(expfam.get_family("bernoulli"), 0.0) == pytest.approx(0.25)
    assert expfam.fisher_info(expfam.get_family("gauss-var"), -1.0) == pytest.approx(0.5)
    assert expfam.fisher_info(expfam.get_family("exponential"), -2.0) == pytest.approx(0.25)


def test_vst_values():
    assert expfam.vst(expfam.get_family("poisson"), 4.0) == pytest.approx(4.0)
    assert expfam.vst(expfam.get_family("gauss-var"), 1.0) == pytest.approx(0.0, abs=1e-15)
    assert expfam.vst(expfam.get_family("bernoulli"), 0.5) == pytest.approx(math.pi / 2)
    assert expfam.gamma_canonical(expfam.get_family("poisson"), 0.0) == pytest.approx(2.0)


def test_exponential_quantile():
    fam = expfam.get_family("exponential")
    assert expfam.quantile(fam, -1.0, 1 - math.exp(-1)) == pytest.approx(1.0)


def test_scalar_in_scalar_out_and_array_in_array_out():
    fam = expfam.get_family("poisson")
    assert isinstance(expfam.mean_param(fam, 0.5), float)
    out = expfam.mean_param(fam, np.array([0.0, 1.0]))
    assert isinstance(out, np.ndarray)
    np.testing.assert_allclose(out, [1.0, math.e])


def test_mean_is_derivative_of_cumulant(fam):
    theta = np.linspace(fam.theta0[0], fam.theta0[1], 7)
    h = 1e-5
    derivative = (fam.cumulant(theta + h) - fam.cumulant(theta - h)) / (2 * h)
    np.testing.assert_allclose(derivative, expfam.mean_param(fam, theta), rtol=1e-6)


def test_fisher_is_derivative_of_mean(fam):
    theta = np.linspace(fam.theta0[0], fam.theta0[1], 7)
    h = 1e-5
    derivative = (fam.mean(theta + h) - fam.mean(theta - h)) / (2 * h)
    np.testing.assert_allclose(derivative, expfam.fisher_info(fam, theta), rtol=1e-6)


def test_inverse_mean_undoes_mean(fam):
    theta = np.linspace(fam.theta0[0], fam.theta0[1], 9)
    lam = expfam.mean_param(fam, theta)
    np.testing.assert_allclose(expfam.inverse_mean(fam, lam), theta, atol=1e-10)


def test_vst_derivative_is_inverse_root_fisher(fam):
    theta = np.linspace(fam.theta0[0], fam.theta0[1], 5)
    lam = fam.mean(theta)
    h = 1e-6 * np.maximum(np.abs(lam), 1e-3)
    derivative = (fam.vst(lam + h) - fam.vst(lam - h)) / (2 * h)
    np.testing.assert_allclose(derivative, 1 / np.sqrt(fam.fisher(theta)), rtol=1e-5)


def test_gamma_is_vst_of_mean(fam):
    theta = np.linspace(fam.theta0[0], fam.theta0[1], 5)
    np.testing.assert_allclose(
        expfam.gamma_canonical(fam, theta),
        expfam.vst(fam, expfam.mean_param(fam, theta)),
        rtol=1e-12,
    )


def test_legendre_derivative_is_inverse_mean():
    fam = expfam.get_family("poisson")
    lam, h = 2.0, 1e-6
    slope = (expfam.legendre(fam, lam + h) - expfam.legendre(fam, lam - h)) / (2 * h)
    assert slope == pytest.approx(math.log(lam), rel=1e-6)


def test_domain_errors():
    with pytest.raises(DomainError):
        expfam.cumulant(expfam.get_family("gauss-var"), 0.0)
    with pytest.raises(DomainError):
        expfam.vst(expfam.get_family("poisson"), -1.0)
    with pytest.raises(DomainError):
        expfam.inverse_mean(expfam.get_family("bernoulli"), np.array([0.5, 1.0]))
    with pytest.raises(DomainError):
        expfam.quantile(expfam.get_family("poisson"), 0.0, 1.0)


def test_check_regularity():
    i_min, i_max = expfam.check_regularity(expfam.get_family("poisson"))
    assert i_min == pytest.approx(math.exp(-1))
    assert i_max == pytest.approx(math.exp(1.1))

    bernoulli = expfam.get_family("bernoulli")
    i_min, i_max = expfam.check_regularity(bernoulli)
    assert i_min == pytest.approx(float(bernoulli.fisher(2.0)))
    assert i_max == pytest.approx(0.25, abs=1e-9)


def test_fattening_must_stay_inside_theta():
    with pytest.raises(DomainError):
        expfam.check_regularity(expfam.get_family("exponential"), theta0=(-1.0, -0.05), eps0=0.1)


def test_numerical_fallbacks_of_a_user_family():
    fam = ShiftedPoisson(theta0=(-1.0, 1.0))
    assert expfam.inverse_mean(fam, math.exp(2.0)) == pytest.approx(2.0, abs=1e-9)
    # F' = lambda^(-1/2), so F(4) - F(1) = 2
    assert expfam.vst(fam, 4.0) - expfam.vst(fam, 1.0) == pytest.approx(2.0, rel=1e-7)
    assert expfam.third_cumulant(fam, 0.0) == pytest.approx(1.0, rel=1e-6)


def test_user_family_needs_theta0():
    with pytest.raises(ConfigError):
        ShiftedPoisson()


def test_moment_bound_check(rng):
    fam = expfam.get_family("poisson")
    report = expfam.moment_bound_check(fam, fam.theta0, fam.eps0, 0.05, 2000, rng)
    assert report.passed
    assert report.exact <= report.bound


def test_moment_bound_check_negative_t(rng):
    fam = expfam.get_family("bernoulli")
    report = expfam.moment_bound_check(fam, fam.theta0, fam.eps0, -fam.eps0 / 2, 4000, rng)
    assert report.t < 0
    assert report.exact <= report.bound
    assert report.passed


def test_moment_bound_rejects_large_t(rng):
    fam = expfam.get_family("poisson")
    with pytest.raises(DomainError):
        expfam.moment_bound_check(fam, fam.theta0, fam.eps0, 0.5, 100, rng)


def test_mean_statistic_sample(rng):
    fam = expfam.get_family("poisson")
    draws = expfam.mean_statistic_sample(fam, 0.5, 64, 4000, rng)
    assert draws.shape == (4000,)
    assert draws.mean() == pytest.approx(math.exp(0.5), rel=0.02)


def test_get_family_aliases():
    assert expfam.get_family("GaussMean").key == "gauss-mean"
    assert expfam.get_family("gauss_var").key == "gauss-var"
    assert expfam.get_family("EXPONENTIAL").key == "exponential"
    with pytest.raises(ConfigError):
        expfam.get_family("gamma")


def test_catalogue():
    table = expfam.catalogue()
    assert list(table["family"]) == ["GaussMean", "GaussVar", "Poisson", "Bernoulli", "Exponential"]
    assert (table["I_min"] <= table["I_mid"]).all()
    assert (table["I_mid"] <= table["I_max"]).all()


def test_natural_map_derivatives(fam):
    maps = expfam.natural_map(fam)
    theta = np.linspace(fam.theta0[0], fam.theta0[1], 5)
    lam = maps.b(theta)
    h = 1e-6 * np.maximum(np.abs(lam), 1e-3)
    a_prime = (maps.a(lam + h) - maps.a(lam - h)) / (2 * h)
    np.testing.assert_allclose(a_prime, 1 / fam.fisher(theta), rtol=1e-5)
    step = 1e-6
    gamma_prime = (maps.gamma(theta + step) - maps.gamma(theta - step)) / (2 * step)
    np.testing.assert_allclose(gamma_prime, np.sqrt(fam.fisher(theta)), rtol=1e-5)
    assert maps.lambda0 == fam.lambda0


def test_gauss_mean_regularity_constants():
    assert expfam.check_regularity(expfam.get_family("gauss-mean")) == (1.0, 1.0)


def test_gauss_mean_moment_bound_is_attained(rng):
    fam = expfam.get_family("gauss-mean")
    report = expfam.moment_bound_check(fam, (-1.0, 1.0), 0.5, 0.5, 20000, rng)
    assert report.bound == pytest.approx(math.exp(0.125))
    assert report.exact == pytest.approx(math.exp(0.125))
    assert abs(report.estimate - report.bound) <= 4 * report.se


def test_vst_inverse_undoes_vst(fam):
    lam = fam.mean(np.linspace(fam.theta0[0], fam.theta0[1], 9))
    np.testing.assert_allclose(expfam.vst_inverse(fam, expfam.vst(fam, lam)), lam, rtol=1e-10)


def test_vst_inverse_of_a_user_family():
    fam = ShiftedPoisson(theta0=(-1.0, 1.0))
    lam = np.exp(np.array([-0.5, 0.0, 0.5]))
    np.testing.assert_allclose(expfam.vst_inverse(fam, expfam.vst(fam, lam)), lam, rtol=1e-6)


def test_vst_inverse_must_land_in_lambda():
    with pytest.raises(DomainError):
        expfam.vst_inverse(expfam.get_family("poisson"), 0.0)
    with pytest.raises(DomainError):
        expfam.vst_inverse(expfam.get_family("bernoulli"), np.array([1.0, 0.0]))


def test_sample_moments_of_u(fam, rng):
    theta, size = fam.midpoint, 40000
    u = fam.u_stat(expfam.sample(fam, theta, rng, size=size))
    mean, info = float(fam.mean(theta)), float(fam.fisher(theta))
    assert abs(u.mean() - mean) <= 4 * math.sqrt(info / size)
    centred = np.square(u - u.mean())
    assert abs(centred.mean() - info) <= 4 * centred.std() / math.sqrt(size)
    cubed = np.power(u - u.mean(), 3)
    skew = float(fam.third_cumulant(theta))
    assert abs(cubed.mean() - skew) <= 4 * cubed.std() / math.sqrt(size) + 1e-3 * abs(skew)


def test_bernoulli_sample_support(rng):
    fam = expfam.get_family("bernoulli")
    draws = expfam.sample(fam, np.linspace(-2.0, 2.0, 5000), rng)
    assert set(np.unique(draws)) <= {0.0, 1.0}


def test_poisson_sample_mean(rng):
    fam = expfam.get_family("poisson")
    draws = expfam.sample(fam, 0.7, rng, size=20000)
    lam = math.exp(0.7)
    np.testing.assert_array_equal(draws, np.round(draws))
    assert abs(draws.mean() - lam) <= 4 * math.sqrt(lam / 20000)


def test_gauss_var_sample_variance(rng):
    fam = expfam.get_family("gauss-var")
    theta = -0.8
    draws = expfam.sample(fam, theta, rng, size=20000)
    sigma2 = -1 / theta
    # E X^2 = sigma^2 and Var X^2 = 2 sigma^4
    assert abs(np.square(draws).mean() - sigma2) <= 4 * math.sqrt(2 / 20000) * sigma2
    assert fam.u_stat(draws).mean() == pytest.approx(sigma2 / 2, rel=0.05)


def test_quantile_inverts_the_law(fam, rng):
    theta, size = fam.midpoint, 20000
    u = np.clip(rng.random(size), 1e-12, 1 - 1e-12)
    draws = expfam.quantile(fam, np.full(size, theta), u)
    law = fam.law(theta)
    if not fam.discrete:
        assert stats.kstest(draws, law.cdf).pvalue > 1e-3
        return
    values, counts = np.unique(draws, return_counts=True)
    pmf = law.pmf(values)
    assert np.all(pmf > 0)
    bulk = pmf >= 0.01
    freq = counts[bulk] / size
    np.testing.assert_array_less(np.abs(freq - pmf[bulk]), 4 * np.sqrt(pmf[bulk] * (1 - pmf[bulk]) / size))
    # Quantile draws and direct draws share one law
    direct = expfam.sample(fam, theta, rng, size=size)
    assert abs(direct.mean() - draws.mean()) <= 4 * math.sqrt(2 * float(fam.fisher(theta)) / size)
