"""
Observations coupled with Gaussian partners, and the tail of S_n(f).

Two constructions are offered. The per-coordinate one feeds each N_i through
the quantile function of P_theta_i. The dyadic one starts from the Gaussian
total of the whole grid, maps it to the total of the statistics U(X_i), then
splits each block total between its two halves using the part of the
Gaussian half-sum that is independent of the block sum:

    z = (G_L - v_L / v_B * G_B) / sqrt(v_L v_R / v_B)

The splits are exact conditional laws (binomial thinning for Poisson, the
conditional Poisson-binomial for Bernoulli, beta splits for gamma-type
statistics), so the marginals of X_i are exact whenever theta is constant
on each block of a gamma-type family, and exact in every case for the
discrete families.
"""

# Native and installed modules
import math

import numpy as np
import pandas as pd
from scipy import signal, special, stats

# Custom modules
import config
from core.expfam import check_theta
from core.experiments import loglr_gauss_hetero, loglr_glm
from core.funcspace import block_partition, sample_holder
from model.coupling_run import (
    DYADIC_BLOCKS,
    PER_COORDINATE,
    CouplingRun,
    GrowthFit,
    TailFit,
)
from model.family import uniform_from_normal
from model.grid_function import GridFunction
from model.sample import GAUSS_HETERO, GAUSS_VST
from utils.errors import ConfigError, ShapeError
from utils.shared import log
from utils.utils import is_power_of_two, loglinear_fit, map_blocks, substreams


def _values(f):
    return f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)


# Split laws


class _PoissonSplit:
    """Sums of Poisson variables are Poisson, halves are binomial thinnings."""

    def __init__(self, fam, theta):
        self.mu = fam.mean(theta)

    def root(self, u):
        return stats.poisson.ppf(u, self.mu.sum())

    def split(self, width, sums, u):
        mu = self.mu.reshape(-1, width)
        ratio = mu[:, : width // 2].sum(axis=1) / mu.sum(axis=1)
        left = stats.binom.ppf(u, np.maximum(sums, 1), ratio)
        return np.where(sums == 0, 0.0, np.minimum(left, sums))


class _BernoulliSplit:
    """Exact Poisson-binomial block laws, built bottom-up by convolution."""

    def __init__(self, fam, theta):
        p = fam.mean(theta)
        pmf = np.stack([1 - p, p], axis=1)
        self.pmf = {1: pmf}
        width = 1
        while pmf.shape[0] > 1:
            pmf = signal.fftconvolve(pmf[0::2], pmf[1::2], axes=1)
            pmf = np.clip(pmf, 0.0, None)
            width *= 2
            self.pmf[width] = pmf / pmf.sum(axis=1, keepdims=True)

    def root(self, u):
        top = self.pmf[max(self.pmf)][0]
        cdf = np.cumsum(top)
        index = np.searchsorted(cdf / cdf[-1], u, side="left")
        return np.minimum(index, top.size - 1).astype(float)

    def split(self, width, sums, u):
        half = width // 2
        halves = self.pmf[half]
        left_pmf, right_pmf = halves[0::2], halves[1::2]
        blocks = left_pmf.shape[0]
        s = sums.astype(int)
        k = np.arange(half + 1)
        other = s[..., None] - k
        feasible = (other >= 0) & (other <= half)
        rows = np.arange(blocks)[None, :, None]
        weights = left_pmf[None, :, :] * right_pmf[rows, np.clip(other, 0, half)]
        weights = np.where(feasible, weights, 0.0)
        cdf = np.cumsum(weights, axis=2)
        left = np.sum(cdf < u[..., None] * cdf[..., -1:], axis=2)
        return np.clip(left, np.maximum(s - half, 0), np.minimum(s, half)).astype(float)


class _GammaSplit:
    """U(X) ~ Gamma(k, scale(theta)); unequal scales are moment-matched."""

    def __init__(self, fam, theta):
        self.shape = fam.gamma_shape
        self.scale = fam.scale(theta)

    def _matched(self, scale):
        mean = self.shape * scale.sum(axis=-1)
        var = self.shape * np.square(scale).sum(axis=-1)
        return mean * mean / var, var / mean

    def root(self, u):
        shape, scale = self._matched(self.scale)
        return stats.gamma.ppf(u, shape, scale=scale)

    def split(self, width, sums, u):
        scale = self.scale.reshape(-1, width)
        left_shape, _ = self._matched(scale[:, : width // 2])
        right_shape, _ = self._matched(scale[:, width // 2 :])
        return sums * special.betaincinv(left_shape, right_shape, u)


def _split_law(fam, theta):
    if fam.key == "poisson":
        return _PoissonSplit(fam, theta)
    if fam.key == "bernoulli":
        return _BernoulliSplit(fam, theta)
    if hasattr(fam, "gamma_shape"):
        return _GammaSplit(fam, theta)
    raise ConfigError(f"{fam.name}: no dyadic split law for this family")


# Batch constructions, one row per replication


def _quantile_batch(fam, theta, eps):
    normals = np.sqrt(fam.fisher(theta)) * eps
    if fam.gaussian_shift:
        return theta + normals, normals, normals
    x_tilde = fam.couple_from_normal(theta, eps)
    return x_tilde, fam.u_stat(x_tilde) - fam.mean(theta), normals


def _dyadic_batch(fam, theta, eps, signs):
    if fam.gaussian_shift:
        return _quantile_batch(fam, theta, eps)
    reps, n = eps.shape
    info = fam.fisher(theta)
    normals = np.sqrt(info) * eps
    law = _split_law(fam, theta)
    sums = law.root(uniform_from_normal(normals.sum(axis=1) / math.sqrt(info.sum())))
    sums = sums.reshape(reps, 1)
    width = n
    while width > 1:
        half = width // 2
        blocks = normals.reshape(reps, -1, width)
        g_left, g_right = blocks[..., :half].sum(axis=2), blocks[..., half:].sum(axis=2)
        v = info.reshape(-1, width)
        v_left, v_right = v[:, :half].sum(axis=1), v[:, half:].sum(axis=1)
        v_block = v_left + v_right
        z = (v_right * g_left - v_left * g_right) / v_block
        z /= np.sqrt(v_left * v_right / v_block)
        left = law.split(width, sums, uniform_from_normal(z))
        sums = np.stack([left, sums - left], axis=2).reshape(reps, -1)
        width = half
    x_tilde = fam.from_statistic(sums, signs)
    return x_tilde, sums - fam.mean(theta), normals


def _check_dyadic(n):
    if not is_power_of_two(n):
        raise ConfigError(f"n={n}: the dyadic coupling needs a power of two")


def couple_batch(fam, theta, rng, reps, scheme=DYADIC_BLOCKS):
    """
    Coupled replications as (reps, n) arrays.

    return
    (x_tilde, u_bar, normals)
    """

    theta = np.asarray(theta, dtype=float)
    eps = rng.standard_normal((reps, theta.size))
    if scheme == PER_COORDINATE:
        return _quantile_batch(fam, theta, eps)
    _check_dyadic(theta.size)
    signs = rng.standard_normal((reps, theta.size))
    return _dyadic_batch(fam, theta, eps, signs)


def _run(fam, theta, seed, scheme):
    theta = np.asarray(_values(theta), dtype=float)
    check_theta(fam, theta)
    rng = np.random.default_rng(seed)
    x_tilde, u_bar, normals = couple_batch(fam, theta, rng, 1, scheme)
    return CouplingRun(
        family=fam,
        theta=theta,
        x_tilde=x_tilde[0],
        normals=normals[0],
        scheme=scheme,
        seed=seed,
        u_bar=u_bar[0],
    )


def quantile_couple(fam, theta, seed):
    """X_i = Q_theta_i(Phi(N_i / sqrt(I(theta_i)))) with N_i ~ N(0, I(theta_i))."""

    return _run(fam, theta, seed, PER_COORDINATE)


def dyadic_couple(fam, theta, seed):
    """Dyadic block coupling of the statistics U(X_i) with the N_i."""

    _check_dyadic(np.size(_values(theta)))
    return _run(fam, theta, seed, DYADIC_BLOCKS)


def s_n(run, f):
    """S_n(f) = sum f(t_i) (U(X_i) - b(theta_i) - N_i)."""

    values = _values(f)
    if values.shape != run.u_bar.shape:
        raise ShapeError(f"grid sizes differ: {values.size} != {run.n}")
    return float(np.sum(values * (run.u_bar - run.normals)))


def coupled_loglrs(fam, f0, g, gamma_star, run):
    """
    The two local log-likelihood ratios on the coupled space.

    With f = f0 + gamma_star g, log L1 is the regression log-LR evaluated on
    the coupled observations and log L2 the heteroscedastic Gaussian log-LR
    evaluated on Y_i = f0(t_i) + N_i / I(f0(t_i)).

    return
    (log L1, log L2)
    """

    f0_values = _values(f0)
    if f0_values.shape != run.theta.shape or _values(g).shape != run.theta.shape:
        raise ShapeError("f0, g and the coupling run must share the grid")
    f = f0_values + gamma_star * _values(g)
    first = loglr_glm(fam, f, f0_values, run.x_tilde)
    y = f0_values + run.normals / fam.fisher(f0_values)
    second = loglr_gauss_hetero(fam, f, f0_values, y, center=f0_values)
    return first.value, second.value


def loglr_pair_sampler(fam, f0, f, scheme=DYADIC_BLOCKS, rate_set=None, partner=GAUSS_HETERO):
    """
    Sampler of coupled (log L1, log L2) for hellinger_mc.

    Both log-LRs compare f with f0 under the law at f0. log L2 belongs to the
    heteroscedastic Gaussian experiment, or with partner=GaussVst to the
    unit-variance experiment with means Gamma(f), driven by the standardized
    partners N_i / sqrt(I(f0(t_i))). With a rate set the sampler returns
    per-block log-LRs, one column per interval of the doubly-local partition.
    """

    if partner not in (GAUSS_HETERO, GAUSS_VST):
        raise ConfigError(f"partner={partner!r}: expected {GAUSS_HETERO} or {GAUSS_VST}")
    f0_values, f_values = _values(f0), _values(f)
    if f0_values.shape != f_values.shape:
        raise ShapeError("f and f0 must share the grid")
    check_theta(fam, f0_values)
    check_theta(fam, f_values)
    shift = f_values - f0_values
    base = fam.mean(f0_values)
    drift = fam.cumulant(f_values) - fam.cumulant(f0_values)
    if partner == GAUSS_VST:
        scale = 1.0 / np.sqrt(fam.fisher(f0_values))
        gauss_shift = fam.gamma(f_values) - fam.gamma(f0_values)
        quad = 0.5 * np.square(gauss_shift)
    else:
        scale = 1.0
        gauss_shift = shift
        quad = 0.5 * np.square(shift) * fam.fisher(f0_values)
    if rate_set is None:
        columns = np.ones((f0_values.size, 1))
    else:
        columns = np.zeros((f0_values.size, rate_set.m))
        for k, idx in enumerate(block_partition(rate_set)):
            columns[idx, k] = 1.0

    def sampler(rng, size):
        _, u_bar, normals = couple_batch(fam, f0_values, rng, size, scheme)
        log_l1 = ((u_bar + base) * shift - drift) @ columns
        log_l2 = (normals * scale * gauss_shift - quad) @ columns
        if rate_set is None:
            return log_l1[:, 0], log_l2[:, 0]
        return log_l1, log_l2

    return sampler


# Tail of the coupling error over a dictionary of test functions


def make_dictionary(n, dict_size=None, holder_const=None, seed=0):
    """
    Hoelder-1/2 test functions as a (dict_size, n) matrix.

    Row 0 is the constant L; the other rows are seeded random members of
    H(1/2, L) with values in [-L/2, L/2].
    """

    dict_size = dict_size or config.COUPLING["dict_size"]
    holder_const = config.COUPLING["holder_const"] if holder_const is None else holder_const
    half = holder_const / 2
    rows = [np.full(n, float(holder_const))]
    for k in range(1, dict_size):
        f = sample_holder(0.5, holder_const, (-half, half), n, [seed, k])
        rows.append(f.values)
    return np.vstack(rows)


def _max_dictionary(fam, theta, dictionary, reps, seed, coupled, workers):
    blocks = min(config.MONTECARLO["blocks"], reps)
    sizes = [len(part) for part in np.array_split(np.arange(reps), blocks)]
    streams = substreams(seed, blocks)

    def run(block):
        rng, size = streams[block], sizes[block]
        if coupled:
            _, u_bar, normals = couple_batch(fam, theta, rng, size, DYADIC_BLOCKS)
        else:
            x = fam.sample(np.broadcast_to(theta, (size, theta.size)), rng)
            u_bar = fam.u_stat(x) - fam.mean(theta)
            normals = np.sqrt(fam.fisher(theta)) * rng.standard_normal((size, theta.size))
        return np.max(np.abs((u_bar - normals) @ dictionary.T), axis=1)

    return np.concatenate(map_blocks(run, range(blocks), workers))


def kmt_tail_test(fam, theta0_value, n, dict_size=None, reps=None, seed=0,
                  holder_const=None, x_grid=None, workers=None):
    """
    Empirical tail of max_f |S_n(f)| / log^2 n over a Hoelder-1/2 dictionary.

    The survival function on the x grid is fitted by c1 exp(-c2 x) on its
    positive values. PASS iff c2 > 0 and r^2 >= 0.9; a statistic that is
    identically zero is a degenerate PASS. When the configured grid leaves
    fewer than min_fit_points positive values the fit moves to a grid between
    the median and the maximum of the statistic; the outcome on the
    configured grid is still reported as default_points and default_passed.

    Keyword arguments:
    fam -- the exponential family
    theta0_value -- constant canonical parameter of the run
    n -- grid size, a power of two
    dict_size -- number of test functions (config.yml)
    reps -- coupled replications, at least 200
    seed -- master seed
    x_grid -- thresholds in units of log^2 n

    return
    The TailFit
    """

    settings = config.COUPLING
    dict_size = dict_size or settings["dict_size"]
    reps = reps or settings["min_reps"]
    if reps < settings["min_reps"]:
        raise ConfigError(f"reps={reps}: the tail test needs at least {settings['min_reps']}")
    _check_dyadic(n)
    theta = np.full(n, float(theta0_value))
    check_theta(fam, theta)
    dictionary = make_dictionary(n, dict_size, holder_const, seed)
    stat = _max_dictionary(fam, theta, dictionary, reps, seed, True, workers)
    stat = stat / math.log(n) ** 2
    grid = np.sort(np.asarray(x_grid if x_grid is not None else settings["x_grid"], float))

    def survival_on(points):
        return np.mean(stat[:, None] > points[None, :], axis=0)

    fit = dict(family=fam.name, theta=float(theta0_value), n=n, reps=reps,
               dict_size=dict_size, scheme=DYADIC_BLOCKS, stat_max=float(stat.max()))
    if stat.max() == 0:
        return TailFit(x_grid=grid, survival=survival_on(grid), c1_fit=None,
                       c2_fit=None, r2=None, passed=True, degenerate=True,
                       default_passed=True, **fit)
    survival = survival_on(grid)
    fit["default_points"] = int(np.count_nonzero(survival))
    refined = False
    if fit["default_points"] < settings["min_fit_points"]:
        log.info("Tail grid leaves %d positive points at n=%d (max statistic %.3g), "
                 "refining between median and max", fit["default_points"], n, stat.max())
        grid = np.linspace(np.median(stat), stat.max(), settings["refined_points"])
        survival = survival_on(grid)
        refined = True
    slope, intercept, r2, _ = loglinear_fit(grid, survival, log_x=False)
    if math.isnan(slope):
        return TailFit(x_grid=grid, survival=survival, c1_fit=None, c2_fit=None,
                       r2=None, passed=False, refined=refined, default_passed=False, **fit)
    c2 = -slope
    passed = bool(c2 > 0 and r2 >= settings["min_r2"])
    return TailFit(
        x_grid=grid,
        survival=survival,
        c1_fit=math.exp(intercept),
        c2_fit=c2,
        r2=r2,
        passed=passed,
        refined=refined,
        # no fit is possible on the configured grid once it had to be refined
        default_passed=passed and not refined,
        **fit,
    )


def growth_exponent(fam, theta_value, n_list, runs, seed=0, coupled=True,
                    dict_size=None, holder_const=None, workers=None):
    """
    Slope of log median max_f |S_n(f)| against log n.

    The uncoupled control draws the observations independently of the
    normals, which makes the maximum grow like sqrt(n).
    """

    medians = []
    for n in n_list:
        theta = np.full(n, float(theta_value))
        check_theta(fam, theta)
        dictionary = make_dictionary(n, dict_size, holder_const, seed)
        stat = _max_dictionary(fam, theta, dictionary, runs, [seed, n], coupled, workers)
        medians.append(float(np.median(stat)))
        log.info("n=%d median max|S_n|=%.4g (%s)", n, medians[-1],
                 "coupled" if coupled else "uncoupled")
    if max(medians) == 0:
        exponent, r2 = 0.0, None
    else:
        exponent, _, r2, _ = loglinear_fit(n_list, medians)
    return GrowthFit(
        family=fam.name,
        theta=float(theta_value),
        coupled=coupled,
        n_list=list(n_list),
        medians=medians,
        exponent=exponent,
        r2=r2,
    )


def cramer_check(fam, theta_grid, c0=None, reps=10000, seed=0):
    """Monte-Carlo estimates of E exp{c0 |U(X) - b(theta)|} along a theta grid."""

    c0 = fam.eps0 / 2 if c0 is None else c0
    rows = []
    for rng, theta in zip(substreams(seed, len(theta_grid)), theta_grid):
        check_theta(fam, theta)
        x = fam.sample(np.full(reps, float(theta)), rng)
        values = np.exp(c0 * np.abs(fam.u_stat(x) - fam.mean(theta)))
        rows.append(
            {
                "theta": float(theta),
                "c0": c0,
                "estimate": float(values.mean()),
                "se": float(values.std(ddof=1) / math.sqrt(reps)),
            }
        )
    return pd.DataFrame(rows)


def marginal_check(fam, theta, draws, seed, scheme=PER_COORDINATE):
    """
    Goodness of fit of the coupled observations at a constant theta.

    Continuous families use the Kolmogorov-Smirnov test, discrete ones a
    chi-square test on the counts with the upper tail pooled.

    return
    (statistic, pvalue)
    """

    law = fam.law(theta)
    if law is None:
        raise ConfigError(f"{fam.name}: no reference law for a goodness-of-fit test")
    theta_values = np.full(draws, float(theta))
    check_theta(fam, theta_values)
    if scheme == DYADIC_BLOCKS:
        _check_dyadic(draws)
    x_tilde, _, _ = couple_batch(fam, theta_values, np.random.default_rng(seed), 1, scheme)
    x_tilde = x_tilde[0]
    if not fam.discrete:
        result = stats.kstest(x_tilde, law.cdf)
        return float(result.statistic), float(result.pvalue)
    top = max(int(law.ppf(0.999)), 1)
    observed = np.bincount(np.minimum(x_tilde.astype(int), top), minlength=top + 1)
    expected = np.append(law.pmf(np.arange(top)), law.sf(top - 1)) * draws
    result = stats.chisquare(observed, expected)
    return float(result.statistic), float(result.pvalue)
