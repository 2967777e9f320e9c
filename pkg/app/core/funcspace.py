"""Hoelder classes on the uniform grid, random members of Sigma and rates."""

# Native and installed modules
import math

import numpy as np

# Custom modules
import config
from model.grid_function import GridFunction, RateSet
from utils.errors import ConfigError, DomainError, ShapeError
from utils.shared import log


def rates(n, beta, kappa0=None, kappa0_star=None):
    """
    Shrinking rates of the local experiments.

    Keyword arguments:
    n -- number of observations, at least 8
    beta -- Hoelder exponent, beta > 1/2
    kappa0 -- constant of the global rate (config.yml)
    kappa0_star -- constant of the local rate (kappa0_star_factor * kappa0)

    return
    The RateSet with gamma_n, delta_n, gamma_star, m and the block counts
    """

    if n < 8:
        raise DomainError(f"n={n}: at least 8 observations are needed")
    if not beta > 0.5:
        raise DomainError(f"beta={beta}: the rates need beta > 1/2")
    kappa0 = config.KAPPA0 if kappa0 is None else kappa0
    if kappa0_star is None:
        kappa0_star = config.KAPPA0_STAR_FACTOR * kappa0
    if kappa0 <= 0 or kappa0_star <= 0:
        raise DomainError("kappa0 and kappa0_star must be positive")
    ratio = n / math.log(n)
    gamma_n = kappa0 * ratio ** (-beta / (2 * beta + 1))
    delta_n = gamma_n ** (1 / beta)
    gamma_star = kappa0_star * ratio ** -0.5
    m = max(int(math.floor(1 / delta_n)), 1)
    counts = np.bincount(block_index(n, m), minlength=m)
    smallest = max(int(counts.min()), 2)
    gamma_star_block = kappa0_star * (smallest / math.log(smallest)) ** -0.5
    return RateSet(
        n=n,
        beta=beta,
        kappa0=kappa0,
        kappa0_star=kappa0_star,
        gamma_n=gamma_n,
        delta_n=delta_n,
        gamma_star=gamma_star,
        m=m,
        n_k=counts,
        gamma_star_block=gamma_star_block,
    )


def block_index(n, m):
    """Index k - 1 of the interval A_k = ((k-1)/m, k/m] holding t_i = i/n."""

    i = np.arange(1, n + 1)
    # ceil(i m / n) - 1 in integer arithmetic
    return (i * m + n - 1) // n - 1


def block_partition(rate_set):
    """Index sets I_k of the doubly-local split, as a list of arrays."""

    index = block_index(rate_set.n, rate_set.m)
    return [np.flatnonzero(index == k) for k in range(rate_set.m)]


def rescale_block(f, f0, rate_set, k):
    """
    Local function f_k(t) = (f - f0)(a_k(t)) / gamma_star_block on block k.

    a_k maps [0, 1] affinely onto A_k, so the values are the differences on
    the grid points of the block.
    """

    _same_grid(f, f0)
    idx = block_partition(rate_set)[k]
    diff = (f.values - f0.values)[idx] / rate_set.gamma_star_block
    return GridFunction(diff, beta=f.beta, holder_const=f.holder_const)


def _lag_set(size, max_pairs):
    """Lags scanned by holder_quotient: all of them, or a geometric subset."""

    if size * (size - 1) // 2 <= max_pairs:
        return np.arange(1, size)
    lags = np.unique(np.geomspace(1, size - 1, 512).astype(int))
    while lags.size > 1 and np.sum(size - lags) > max_pairs:
        lags = lags[::2]
    return lags


def holder_quotient(f, beta):
    """
    Empirical Hoelder seminorm of a grid function.

    With beta = m + alpha, 0 < alpha <= 1, the m-th finite differences
    scaled by n^m are compared at all pairs of grid points (all lags up to
    the configured pair budget, a fixed geometric set of lags beyond it).
    """

    values = f.values if isinstance(f, GridFunction) else np.asarray(f, float)
    n = values.size
    if n < 4:
        raise DomainError("holder_quotient needs at least 4 grid points")
    order = int(math.ceil(beta)) - 1
    alpha = beta - order
    diffs = np.diff(values, order) * float(n) ** order
    size = diffs.size
    max_pairs = (
        size * (size - 1) // 2
        if n <= config.HOLDER["exact_scan_max_n"]
        else config.HOLDER["max_pairs"]
    )
    best = 0.0
    for lag in _lag_set(size, max_pairs):
        jump = np.max(np.abs(diffs[lag:] - diffs[:-lag]))
        best = max(best, jump / (lag / n) ** alpha)
    return float(best)


def _cosine_shape(beta, n, rng, terms):
    t = np.arange(1, n + 1) / n
    j = np.arange(1, terms + 1)
    xi = rng.uniform(-1.0, 1.0, terms)
    weights = xi * j ** -(beta + 0.5)
    return np.cos(np.pi * np.outer(t, j)) @ weights


def sample_holder(beta, holder_const, theta0, n, seed, terms=None):
    """
    Random member of Sigma = L(Theta0) intersected with H(beta, L).

    A truncated cosine series around the middle of Theta0, scaled so that the
    empirical Hoelder quotient is at most L and the values keep a margin
    inside Theta0.
    """

    if not 0 < beta <= 2:
        raise ConfigError(f"beta={beta}: the generator covers 0 < beta <= 2")
    if holder_const < 0:
        raise ConfigError(f"L={holder_const}: must be nonnegative")
    lo, hi = float(theta0[0]), float(theta0[1])
    if not lo < hi:
        raise ConfigError(f"theta0=[{lo}, {hi}] is degenerate")
    mid, half = (lo + hi) / 2, (hi - lo) / 2
    rng = np.random.default_rng(seed)
    shape = _cosine_shape(beta, n, rng, terms or config.HOLDER["terms"])
    shape -= shape.mean()
    amplitude = float(np.max(np.abs(shape)))
    quotient = holder_quotient(shape, beta) if n >= 4 else 0.0
    degenerate = False
    if holder_const == 0:
        scale = 0.0
    elif amplitude <= 1e-12 or quotient <= 1e-12:
        log.warning("Hoelder generator degenerated, using the midpoint of theta0")
        scale, degenerate = 0.0, True
    else:
        margin = 1 - config.HOLDER["margin"]
        scale = min(holder_const / quotient, margin * half / amplitude)
    return GridFunction(
        mid + scale * shape,
        beta=beta,
        holder_const=holder_const,
        theta0=(lo, hi),
        in_sigma=True,
        degenerate=degenerate,
    )


def holder_bump(n, center, width, beta):
    """Tent-shaped bump (1 - |t - c|/w)_+^min(beta, 1) with sup-norm 1."""

    t = np.arange(1, n + 1) / n
    base = np.clip(1 - np.abs(t - center) / width, 0.0, None)
    bump = base ** min(beta, 1.0)
    peak = int(np.argmax(bump))
    # the peak sits on the grid point closest to the centre
    bump[peak] = 1.0
    return bump


def neighborhood_candidate(f0, gamma_n, theta0, seed, width=None):
    """
    Worst-case candidate f = f0 +- gamma_n * bump in Sigma_f0(gamma_n).

    The bump is centred at a seeded point of [1/4, 3/4] and points towards
    the middle of Theta0, so that f keeps to the same side of the domain
    boundary as f0.
    """

    rng = np.random.default_rng(seed)
    center = float(rng.uniform(0.25, 0.75))
    bump = holder_bump(f0.n, center, width or config.HOLDER["bump_width"], f0.beta)
    mid = (theta0[0] + theta0[1]) / 2
    peak = int(np.argmax(bump))
    sign = -1.0 if f0.values[peak] > mid else 1.0
    return f0.with_values(f0.values + sign * gamma_n * bump)


def _same_grid(f, g):
    if f.n != g.n:
        raise ShapeError(f"grid sizes differ: {f.n} != {g.n}")


def neighborhood_contains(f0, f, gamma_n):
    """True iff max |f - f0| <= gamma_n on the grid (boundary inclusive)."""

    _same_grid(f0, f)
    distance = float(np.max(np.abs(f.values - f0.values)))
    return distance <= gamma_n * (1 + 1e-12)
