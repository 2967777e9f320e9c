"""Hellinger distances between experiments and the deficiency bound."""

# Native and installed modules
import math
from typing import List, NamedTuple

import numpy as np
from scipy import integrate

# Custom modules
import config
from core.expfam import check_regularity, check_theta
from core.funcspace import neighborhood_candidate, rates, sample_holder
from model.grid_function import GridFunction
from model.hellinger_estimate import (
    EXACT_GAUSSIAN,
    EXACT_WHITE_NOISE,
    MONTE_CARLO,
    HellingerEstimate,
)
from model.report import Report
from utils.errors import ConfigError, DomainError, ShapeError
from utils.utils import map_blocks, substreams


def _values(f):
    return f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)


def hellinger_gaussian_products(means1, means2, variances):
    """h2 = 1 - exp(-sum (mu1 - mu2)^2 / (8 sigma^2)) for Gaussian products."""

    m1, m2 = np.asarray(means1, float), np.asarray(means2, float)
    var = np.broadcast_to(np.asarray(variances, float), m1.shape)
    if m1.shape != m2.shape or np.shape(variances) not in ((), m1.shape):
        raise ShapeError(f"shapes differ: {m1.shape}, {m2.shape}, {np.shape(variances)}")
    if np.any(var <= 0):
        raise DomainError("variances must be positive")
    exponent = float(np.sum(np.square(m1 - m2) / var)) / 8
    return HellingerEstimate(
        h2=float(-math.expm1(-exponent)),
        se=0.0,
        reps=0,
        method=EXACT_GAUSSIAN,
        bound=exponent,
    )


def hellinger_bound_product(coord_h2):
    """Subadditive bound min(1, sum h2_i) for a product of experiments."""

    coord = np.asarray(coord_h2, dtype=float)
    if np.any((coord < 0) | (coord > 1)):
        raise DomainError("coordinate h2 values must lie in [0, 1]")
    return float(min(1.0, coord.sum()))


def hellinger_white_noise(m1, m2, n):
    """
    Hellinger distance between white-noise experiments with drifts m1, m2.

    h2 = 1 - exp{-(n/8) int_0^1 (m1 - m2)^2 dt}; the integral is a trapezoid
    rule on t_0 = 0, t_1, ..., t_n with the value at t_1 extended to t_0.
    """

    v1, v2 = _values(m1), _values(m2)
    if v1.shape != v2.shape:
        raise ShapeError(f"grid sizes differ: {v1.size} != {v2.size}")
    sq = np.square(v1 - v2)
    grid = np.concatenate(([0.0], np.arange(1, sq.size + 1) / sq.size))
    integral = float(integrate.trapezoid(np.concatenate((sq[:1], sq)), grid))
    exponent = n * integral / 8
    return HellingerEstimate(
        h2=float(-math.expm1(-exponent)),
        se=0.0,
        reps=0,
        method=EXACT_WHITE_NOISE,
        bound=exponent,
    )


def deficiency_upper(h_sup):
    """Delta <= sqrt(2) sup H."""

    if not 0.0 <= h_sup <= 1.0:
        raise DomainError(f"h_sup={h_sup} outside [0, 1]")
    return math.sqrt(2) * h_sup


def hellinger_terms(log_l1, log_l2):
    """(sqrt(L1) - sqrt(L2))^2 / 2 computed with the larger log-LR factored out."""

    log_l1, log_l2 = np.asarray(log_l1, float), np.asarray(log_l2, float)
    top = np.maximum(log_l1, log_l2)
    gap = np.abs(log_l1 - log_l2)
    with np.errstate(divide="ignore", over="ignore"):
        terms = 0.5 * np.exp(top + 2 * np.log(-np.expm1(-gap / 2)))
    return np.where(gap == 0, 0.0, terms)


def _jackknife(sums, counts):
    total, count = sums.sum(), counts.sum()
    leave_out = (total - sums) / (count - counts)
    blocks = sums.size
    spread = np.sum(np.square(leave_out - leave_out.mean()))
    return float(total / count), float(math.sqrt((blocks - 1) / blocks * spread))


def _draw(pair_sampler, reps, seed, blocks, workers):
    if reps < config.MONTECARLO["min_reps"]:
        raise ConfigError(
            f"reps={reps}: at least {config.MONTECARLO['min_reps']} are needed"
        )
    blocks = min(blocks or config.MONTECARLO["blocks"], reps)
    sizes = [len(part) for part in np.array_split(np.arange(reps), blocks)]
    streams = substreams(seed, blocks)

    def run(block):
        log_l1, log_l2 = pair_sampler(streams[block], sizes[block])
        return hellinger_terms(log_l1, log_l2)

    return map_blocks(run, range(blocks), workers)


def _estimate(terms_by_block, reps):
    sums = np.array([np.sum(terms) for terms in terms_by_block])
    counts = np.array([np.shape(terms)[0] for terms in terms_by_block], float)
    raw, se = _jackknife(sums, counts)
    return HellingerEstimate(
        h2=float(min(max(raw, 0.0), 1.0)),
        se=se,
        reps=int(reps),
        method=MONTE_CARLO,
        raw=raw,
    )


def hellinger_mc(pair_sampler, reps=None, seed=0, blocks=None, workers=None):
    """
    Monte-Carlo squared Hellinger distance between two coupled likelihoods.

    Keyword arguments:
    pair_sampler -- callable (rng, size) -> (log L1, log L2), both arrays of
                    length size computed on the same realizations under the
                    common base measure
    reps -- number of replications (at least 100)
    seed -- master seed; block b uses the b-th spawned substream
    blocks -- jackknife blocks (config.yml, 50)
    workers -- thread pool size for the blocks

    return
    HellingerEstimate with the jackknife standard error
    """

    reps = reps or config.MONTECARLO["reps"]
    terms = _draw(pair_sampler, reps, seed, blocks, workers)
    return _estimate(terms, reps)


class BlockHellinger(NamedTuple):
    total: HellingerEstimate
    parts: List[HellingerEstimate]
    product_bound: float
    product_se: float


def hellinger_mc_blocks(pair_sampler, reps=None, seed=0, blocks=None, workers=None):
    """
    Hellinger distance of a product experiment and of each of its factors.

    The sampler returns (size, k) arrays of per-factor log-LRs; the total uses
    row sums, factor j uses column j, and the subadditive product bound is
    reported with its own jackknife error.
    """

    reps = reps or config.MONTECARLO["reps"]
    if reps < config.MONTECARLO["min_reps"]:
        raise ConfigError(
            f"reps={reps}: at least {config.MONTECARLO['min_reps']} are needed"
        )
    blocks = min(blocks or config.MONTECARLO["blocks"], reps)
    sizes = [len(part) for part in np.array_split(np.arange(reps), blocks)]
    streams = substreams(seed, blocks)

    def run(block):
        log_l1, log_l2 = pair_sampler(streams[block], sizes[block])
        log_l1, log_l2 = np.atleast_2d(log_l1), np.atleast_2d(log_l2)
        total = hellinger_terms(log_l1.sum(axis=1), log_l2.sum(axis=1))
        parts = hellinger_terms(log_l1, log_l2)
        return total, parts

    results = map_blocks(run, range(blocks), workers)
    total = _estimate([r[0] for r in results], reps)
    width = results[0][1].shape[1]
    parts = [
        _estimate([r[1][:, j] for r in results], reps) for j in range(width)
    ]
    summed = [r[1].sum(axis=1) for r in results]
    sums = np.array([np.sum(s) for s in summed])
    counts = np.array([s.size for s in summed], float)
    product_raw, product_se = _jackknife(sums, counts)
    return BlockHellinger(
        total=total,
        parts=parts,
        product_bound=float(min(1.0, max(product_raw, 0.0))),
        product_se=product_se,
    )


def _gamma_curvature(fam, lo, hi, points=2001):
    grid = np.linspace(lo, hi, points)
    return float(np.max(np.abs(fam.third_cumulant(grid) / (2 * np.sqrt(fam.fisher(grid))))))


def vst_distance_check(fam, n, beta, pairs, seed, holder_const=1.0, kappa0=None):
    """
    White-noise distance between the Gaussian experiment with drift
    (f - f0) I(f0)^(1/2) and the variance-stable one with drift
    Gamma(f) - Gamma(f0), on random pairs with ||f - f0|| <= gamma_n.

    Each distance is compared with (n/8) gamma_n^4 / (16 I_min) and with the
    sharper (n/8) gamma_n^4 sup|Gamma''|^2 / 4 scanned on Theta0.
    """

    rate_set = rates(n, beta, kappa0)
    gamma_n = rate_set.gamma_n
    i_min, _ = check_regularity(fam)
    printed = n / 8 * gamma_n ** 4 / (16 * i_min)
    curvature = _gamma_curvature(fam, *fam.theta0)
    scanned = n / 8 * gamma_n ** 4 * curvature ** 2 / 4
    rows = []
    for pair in range(pairs):
        f0 = sample_holder(beta, holder_const, fam.theta0, n, [seed, pair])
        f = neighborhood_candidate(f0, gamma_n, fam.theta0, [seed, pair, 1])
        check_theta(fam, f.values)
        m1 = (f.values - f0.values) * np.sqrt(fam.fisher(f0.values))
        m2 = fam.gamma(f.values) - fam.gamma(f0.values)
        estimate = hellinger_white_noise(m1, m2, n)
        rows.append(
            {
                "pair": pair,
                "h2": estimate.h2,
                "linearized": estimate.bound,
                "bound": printed,
                "scanned_bound": scanned,
                "violation": bool(estimate.h2 > printed),
            }
        )
    violations = sum(row["violation"] for row in rows)
    return Report(
        command="vst-distance",
        family=fam.name,
        passed=violations == 0,
        summary={
            "n": n,
            "beta": beta,
            "gamma_n": gamma_n,
            "i_min": i_min,
            "bound": printed,
            "scanned_bound": scanned,
            "max_h2": max(row["h2"] for row in rows) if rows else 0.0,
            "violations": violations,
            "pairs": pairs,
        },
        rows=rows,
    )
