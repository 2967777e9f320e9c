# Native and installed modules
import math

import numpy as np
import pytest

# Custom modules
from core import metrics
from core.expfam import get_family
from model.hellinger_estimate import EXACT_GAUSSIAN, MONTE_CARLO, HellingerEstimate
from utils.errors import ConfigError, DomainError, InvariantError, ShapeError


def _normal_shift_sampler(mu):
    """log-LRs of N(mu, 1) and N(0, 1) against N(0, 1), per coordinate."""

    mu = np.atleast_1d(np.asarray(mu, dtype=float))

    def sampler(rng, size):
        x = rng.standard_normal((size, mu.size))
        log_l1 = x * mu - mu * mu / 2
        log_l2 = np.zeros_like(log_l1)
        if mu.size == 1:
            return log_l1[:, 0], log_l2[:, 0]
        return log_l1, log_l2

    return sampler


def test_gaussian_products():
    assert metrics.hellinger_gaussian_products([0.0, 1.0], [0.0, 1.0], 1.0).h2 == 0.0
    estimate = metrics.hellinger_gaussian_products([2 * math.sqrt(2)], [0.0], [1.0])
    assert estimate.h2 == pytest.approx(1 - math.exp(-1))
    assert estimate.method == EXACT_GAUSSIAN
    assert estimate.se == 0.0
    assert estimate.bound == pytest.approx(1.0)


def test_gaussian_products_errors():
    with pytest.raises(ShapeError):
        metrics.hellinger_gaussian_products([0.0, 1.0], [0.0], 1.0)
    with pytest.raises(DomainError):
        metrics.hellinger_gaussian_products([0.0], [1.0], [0.0])


def test_bound_product():
    assert metrics.hellinger_bound_product([0.0, 0.0]) == 0.0
    assert metrics.hellinger_bound_product([0.1, 0.2]) == pytest.approx(0.3)
    assert metrics.hellinger_bound_product([0.7, 0.6]) == 1.0
    with pytest.raises(DomainError):
        metrics.hellinger_bound_product([0.5, 1.5])


def test_bound_product_dominates_gaussian_products():
    rng = np.random.default_rng(17)
    violations = 0
    for _ in range(10000):
        size = int(rng.integers(1, 9))
        means1 = rng.normal(scale=rng.uniform(0.05, 3.0), size=size)
        means2 = rng.normal(scale=rng.uniform(0.05, 3.0), size=size)
        variances = rng.uniform(0.2, 5.0, size=size)
        coord = -np.expm1(-np.square(means1 - means2) / (8 * variances))
        product = metrics.hellinger_gaussian_products(means1, means2, variances).h2
        violations += product > metrics.hellinger_bound_product(coord) + 1e-12
    assert violations == 0


def test_white_noise_constant_drift():
    n, c = 64, 0.25
    m1 = np.full(n, 1.0 + c)
    m2 = np.full(n, 1.0)
    estimate = metrics.hellinger_white_noise(m1, m2, n)
    assert estimate.h2 == pytest.approx(1 - math.exp(-n * c * c / 8))
    assert estimate.bound == pytest.approx(n * c * c / 8)
    assert metrics.hellinger_white_noise(m1, m1, n).h2 == 0.0


def test_deficiency_upper():
    assert metrics.deficiency_upper(0.0) == 0.0
    assert metrics.deficiency_upper(0.5) == pytest.approx(0.70711, rel=1e-5)
    assert metrics.deficiency_upper(1.0) == pytest.approx(math.sqrt(2))
    with pytest.raises(DomainError):
        metrics.deficiency_upper(1.5)


def test_hellinger_terms_match_direct_formula():
    log_l1 = np.array([-1.0, 0.0, 2.0, 0.5])
    log_l2 = np.array([0.0, 0.0, -1.0, 0.7])
    direct = 0.5 * np.square(np.exp(log_l1 / 2) - np.exp(log_l2 / 2))
    np.testing.assert_allclose(metrics.hellinger_terms(log_l1, log_l2), direct, rtol=1e-12)


def test_hellinger_terms_survive_large_log_ratios():
    terms = metrics.hellinger_terms(np.array([-2000.0]), np.array([-2000.0 + 1e-3]))
    assert np.all(np.isfinite(terms))


def test_hellinger_mc_identical_likelihoods():
    def sampler(rng, size):
        x = rng.standard_normal(size)
        return x, x

    estimate = metrics.hellinger_mc(sampler, reps=400, seed=1)
    assert estimate.h2 == 0.0
    assert estimate.se == 0.0
    assert estimate.method == MONTE_CARLO


@pytest.mark.parametrize("shift", [0.1, 0.5, 1.0, 2.0])
def test_hellinger_mc_normal_shift(shift):
    estimate = metrics.hellinger_mc(_normal_shift_sampler(shift), reps=20000, seed=3)
    exact = -math.expm1(-shift * shift / 8)
    assert abs(estimate.h2 - exact) <= 4 * estimate.se
    assert estimate.se > 0


def test_hellinger_mc_is_reproducible_with_threads():
    sampler = _normal_shift_sampler(0.5)
    serial = metrics.hellinger_mc(sampler, reps=2000, seed=5, blocks=10, workers=1)
    threaded = metrics.hellinger_mc(sampler, reps=2000, seed=5, blocks=10, workers=4)
    assert serial.h2 == threaded.h2
    assert serial.se == threaded.se


def test_hellinger_mc_needs_replications():
    with pytest.raises(ConfigError):
        metrics.hellinger_mc(_normal_shift_sampler(1.0), reps=50)


def test_hellinger_mc_blocks():
    mu = np.array([1.0, 0.5])
    result = metrics.hellinger_mc_blocks(_normal_shift_sampler(mu), reps=20000, seed=7)
    total = 1 - math.exp(-np.sum(mu * mu) / 8)
    assert abs(result.total.h2 - total) <= 4 * result.total.se
    for part, value in zip(result.parts, mu):
        assert abs(part.h2 - (1 - math.exp(-value * value / 8))) <= 4 * part.se
    assert result.product_bound == pytest.approx(sum(part.raw for part in result.parts))


def test_estimate_invariants():
    with pytest.raises(InvariantError):
        HellingerEstimate(h2=1.5, se=0.0, reps=0, method=EXACT_GAUSSIAN)
    with pytest.raises(InvariantError):
        HellingerEstimate(h2=0.5, se=0.1, reps=0, method=EXACT_GAUSSIAN)


@pytest.mark.parametrize("key", ["poisson", "gauss-mean"])
def test_vst_distance_check_small(key):
    report = metrics.vst_distance_check(get_family(key), 256, 0.75, pairs=5, seed=0)
    assert report.passed
    assert len(report.rows) == 5
    for row in report.rows:
        assert row["h2"] <= row["bound"]
        assert row["h2"] <= row["linearized"] + 1e-15
    if key == "gauss-mean":
        assert report.summary["max_h2"] == pytest.approx(0.0, abs=1e-15)


@pytest.mark.slow
@pytest.mark.parametrize("key", ["gauss-mean", "gauss-var", "poisson", "bernoulli", "exponential"])
def test_vst_distance_check(key):
    report = metrics.vst_distance_check(get_family(key), 4096, 1.0, pairs=100, seed=0)
    assert report.summary["violations"] == 0
    assert report.passed
    assert len(report.rows) == 100
    assert max(row["h2"] for row in report.rows) <= report.summary["bound"]
