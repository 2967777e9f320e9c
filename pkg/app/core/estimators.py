"""Preliminary estimator of f: Nadaraya-Watson smoothing of U(X_i), truncation
to Lambda0 and inversion of the mean map."""

# Native and installed modules
import math
from dataclasses import replace

import numpy as np

# Custom modules
import config
from core.expfam import fisher_inf, inverse_mean
from core.experiments import simulate_glm
from core.funcspace import rates, sample_holder
from model.grid_function import GridFunction
from model.kernel import EstimatorOutput, KernelSpec, KernelSpecModel
from model.report import Report
from model.sample import GLM, ExperimentSample
from utils.errors import ConfigError, DomainError, NumericalError
from utils.shared import log
from utils.utils import map_blocks


def _epanechnikov(u):
    return np.where(np.abs(u) < 1, 0.75 * (1 - np.square(u)), 0.0)


def epanechnikov(scale=1.0):
    """K(u) = 3/4 (1 - u^2) on [-1, 1]; any scale other than 1 is rejected."""

    return KernelSpec(
        tau=1.0,
        k_max=0.75 * scale,
        evaluator=lambda u: scale * _epanechnikov(u),
        holder_beta=1.0,
        name="epanechnikov",
    )


KERNELS = {"epanechnikov": epanechnikov}


def _check_bandwidth(delta_n, upper=1.0):
    if not 0 < delta_n < upper:
        raise DomainError(f"delta_n={delta_n} outside (0, {upper})")


def design_density(kernel, n, delta_n, t):
    """rho_n(t) = (n delta_n)^-1 sum K((t_i - t) / delta_n)."""

    _check_bandwidth(delta_n)
    t_arr = np.asarray(t, dtype=float)
    if np.any((t_arr < 0) | (t_arr > 1)):
        raise DomainError("t must lie in [0, 1]")
    grid = np.arange(1, n + 1) / n
    weights = kernel((grid[None, :] - t_arr.reshape(-1, 1)) / delta_n)
    rho = weights.sum(axis=1) / (n * delta_n)
    return float(rho[0]) if t_arr.ndim == 0 else rho


def _band(kernel, n, delta_n):
    """Kernel weights K(k / (n delta_n)) for the lags |k| < tau n delta_n."""

    reach = int(math.floor(kernel.tau * n * delta_n))
    lags = np.arange(-reach, reach + 1)
    return reach, kernel(lags / (n * delta_n))


def _smooth(values, band, reach):
    full = np.convolve(values, band)
    return full[reach : reach + values.size]


def nadaraya_watson_values(values, kernel, delta_n):
    """
    Nadaraya-Watson smoother of values observed on the grid t_i = i/n.

    return
    (g_star, rho) on the grid
    """

    values = np.asarray(values, dtype=float)
    n = values.size
    reach, band = _band(kernel, n, delta_n)
    mass = _smooth(np.ones(n), band, reach)
    rho = mass / (n * delta_n)
    floor = config.ESTIMATOR["density_floor"]
    if rho.min() < floor:
        raise NumericalError(f"design density {rho.min():.3g} below {floor}")
    return _smooth(values, band, reach) / mass, rho


def nadaraya_watson(sample, kernel, delta_n):
    """
    g_n*(t) = (n delta_n rho_n(t))^-1 sum K((t_i - t) / delta_n) U(X_i).

    Keyword arguments:
    sample -- a Glm ExperimentSample
    kernel -- the KernelSpec
    delta_n -- bandwidth in (0, 1/2)

    return
    EstimatorOutput with the g_star stage and the design density
    """

    if sample.kind != GLM:
        raise DomainError(f"the estimator needs a {GLM} sample, got {sample.kind}")
    _check_bandwidth(delta_n, 0.5)
    g_star, rho = nadaraya_watson_values(sample.family.u_stat(sample.data), kernel, delta_n)
    return EstimatorOutput(
        g_star=GridFunction(g_star, beta=sample.f.beta, holder_const=sample.f.holder_const),
        rho=GridFunction(rho),
        bandwidth=delta_n,
    )


def finalize_estimate(out, fam, lambda_range=None):
    """
    g** = clamp(g*, lambda_range); f* = a(g**).

    The recorded Lipschitz constant of a is 1 / inf I over a(lambda_range),
    which is Theta0 for the default range Lambda0.
    """

    lo, hi = lambda_range if lambda_range is not None else fam.lambda0
    g_starstar = np.clip(out.g_star.values, lo, hi)
    f_star = inverse_mean(fam, g_starstar)
    i_min = fisher_inf(fam, (inverse_mean(fam, lo), inverse_mean(fam, hi)))
    return replace(
        out,
        g_starstar=out.g_star.with_values(g_starstar),
        f_star=out.g_star.with_values(np.asarray(f_star, dtype=float)),
        lipschitz=1.0 / i_min,
    )


def bias_constant(kernel, beta, holder_const, i_max, rho_min):
    """c5 = (2 tau)^beta I_max L k_max / rho_min."""

    if rho_min <= 0:
        raise DomainError("rho_min must be positive")
    return (2 * kernel.tau) ** beta * i_max * holder_const * kernel.k_max / rho_min


def estimate(sample, fam, delta_n, kernel=None):
    """Full preliminary estimate f* of one Glm sample."""

    kernel = kernel or KERNELS[config.ESTIMATOR["kernel"]]()
    return finalize_estimate(nadaraya_watson(sample, kernel, delta_n), fam)


def _noise_free(fam, f, seed):
    data = fam.from_statistic(fam.mean(f.values), np.ones(f.n))
    return ExperimentSample(GLM, fam, f, f.n, seed, data)


def es1_experiment(fam, beta, holder_const, n_list, reps, seed, kernel=None,
                   kappa0=None, noise=True, workers=None):
    """
    Sup-norm error of the preliminary estimator along n.

    For each n and replication, f is drawn from Sigma, a Glm sample is
    simulated and estimated, and sup |f* - f| / gamma_n is recorded. The
    fitted c1 of each n is the 95th percentile of that ratio. PASS iff the
    fitted values agree within a factor 2 along n_list and the failure rate
    at the largest of them is at most 5%.
    """

    if reps < config.ESTIMATOR["min_reps"]:
        raise ConfigError(
            f"reps={reps}: the estimator study needs at least {config.ESTIMATOR['min_reps']}"
        )
    if beta > 1:
        log.warning("beta=%s > 1: the bias bound only uses first-order smoothness", beta)
    kernel = kernel or KERNELS[config.ESTIMATOR["kernel"]]()
    rows, fitted = [], {}
    for n in n_list:
        rate_set = rates(n, beta, kappa0)

        def replicate(rep, n=n, rate_set=rate_set):
            f = sample_holder(beta, holder_const, fam.theta0, n, [seed, n, rep, 0])
            if noise:
                sample = simulate_glm(fam, f, [seed, n, rep, 1])
            else:
                sample = _noise_free(fam, f, None)
            out = estimate(sample, fam, rate_set.delta_n, kernel)
            sup_error = float(np.max(np.abs(out.f_star.values - f.values)))
            return {
                "n": n,
                "rep": rep,
                "sup_error": sup_error,
                "gamma_n": rate_set.gamma_n,
                "ratio": sup_error / rate_set.gamma_n,
            }

        batch = map_blocks(replicate, range(reps), workers)
        fitted[n] = float(np.percentile([row["ratio"] for row in batch], 95))
        log.info("n=%d fitted c1=%.4g", n, fitted[n])
        rows.extend(batch)
    c1 = max(fitted.values())
    stability = c1 / min(fitted.values()) if min(fitted.values()) > 0 else math.inf
    failure_rate = float(np.mean([row["ratio"] > c1 for row in rows]))
    acceptance = config.ACCEPTANCE
    stable = stability <= acceptance["es1_stability"]
    return Report(
        command="estimate",
        family=fam.name,
        passed=bool(stable and failure_rate <= acceptance["es1_failure_rate"]),
        summary={
            "beta": beta,
            "fitted_c1": c1,
            "fitted_c1_by_n": {str(n): value for n, value in fitted.items()},
            "stability": stability,
            "stable": bool(stable),
            "failure_rate": failure_rate,
            "noise": noise,
            "kernel": KernelSpecModel().dump(kernel),
        },
        rows=rows,
    )


def net_projection(f_star, gamma_n, theta0, terms=None):
    """
    Projection of f* onto a finite net: cosine coefficients rounded to a
    lattice of step gamma_n / (J + 1), so the projection moves f* by less
    than gamma_n / 2 beyond the least-squares residual.
    """

    if f_star.n > config.ESTIMATOR["net_max_n"]:
        raise ConfigError(
            f"n={f_star.n}: the net projection is limited to n <= {config.ESTIMATOR['net_max_n']}"
        )
    terms = terms or config.ESTIMATOR["net_terms"]
    basis = np.cos(np.pi * np.outer(f_star.t, np.arange(terms)))
    coef, *_ = np.linalg.lstsq(basis, f_star.values, rcond=None)
    step = gamma_n / (terms + 1)
    lattice = np.round(coef / step) * step
    values = np.clip(basis @ lattice, theta0[0], theta0[1])
    return f_star.with_values(values)
