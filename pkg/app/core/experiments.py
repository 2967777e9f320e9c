"""The regression experiment and its accompanying Gaussian experiments."""

# Native and installed modules
import numpy as np

# Custom modules
from core.expfam import check_regularity, check_theta, third_cumulant_bound
from model.grid_function import GridFunction
from model.sample import (
    GAUSS_HETERO,
    GAUSS_VST,
    GLM,
    ExperimentSample,
    LogLikelihoodRatio,
)
from utils.errors import ShapeError


def _values(f):
    return f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)


def _same_grid(*functions):
    sizes = {_values(f).size for f in functions}
    if len(sizes) != 1:
        raise ShapeError(f"grid sizes differ: {sorted(sizes)}")


def simulate_glm(fam, f, seed):
    """X_i ~ P_f(t_i) independently."""

    check_theta(fam, f.values)
    rng = np.random.default_rng(seed)
    data = fam.sample(f.values, rng)
    return ExperimentSample(GLM, fam, f, f.n, seed, data)


def simulate_gauss_hetero(fam, f0, f, seed):
    """Y_i = f(t_i) + I(f0(t_i))^(-1/2) eps_i."""

    _same_grid(f0, f)
    check_theta(fam, f.values)
    check_theta(fam, f0.values)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(f.n)
    data = f.values + noise / np.sqrt(fam.fisher(f0.values))
    return ExperimentSample(GAUSS_HETERO, fam, f, f.n, seed, data, f0=f0)


def simulate_gauss_vst(fam, f, seed):
    """Y_i = Gamma(f(t_i)) + eps_i."""

    check_theta(fam, f.values)
    rng = np.random.default_rng(seed)
    data = fam.gamma(f.values) + rng.standard_normal(f.n)
    return ExperimentSample(GAUSS_VST, fam, f, f.n, seed, data)


def _data(sample):
    if isinstance(sample, ExperimentSample):
        return sample.data
    return np.asarray(sample, dtype=float)


def loglr_glm(fam, f, f0, data):
    """sum (f - f0) U(X_i) - sum (V(f) - V(f0))."""

    x = _data(data)
    _same_grid(f, f0, x)
    f_values, f0_values = _values(f), _values(f0)
    check_theta(fam, f_values)
    check_theta(fam, f0_values)
    value = np.sum((f_values - f0_values) * fam.u_stat(x)) - np.sum(
        fam.cumulant(f_values) - fam.cumulant(f0_values)
    )
    return LogLikelihoodRatio(GLM, float(value), f, f0)


def _gaussian_shift(mean1, mean0, y, precision):
    """log-LR of N(mean1, 1/precision) against N(mean0, 1/precision)."""

    return float(
        np.sum(precision * (mean1 - mean0) * y)
        - 0.5 * np.sum(precision * (mean1 * mean1 - mean0 * mean0))
    )


def loglr_gauss_hetero(fam, f, f0, data, center=None):
    """
    Exact log-LR of the heteroscedastic Gaussian experiment.

    The noise level I(center)^(-1/2) is the same under f and f0; the centre
    is taken from the sample, then from ``center``, then defaults to f0.
    """

    y = _data(data)
    if center is None and isinstance(data, ExperimentSample):
        center = data.f0
    center = f0 if center is None else center
    _same_grid(f, f0, center, y)
    f_values, f0_values = _values(f), _values(f0)
    for values in (f_values, f0_values, _values(center)):
        check_theta(fam, values)
    precision = fam.fisher(_values(center))
    value = _gaussian_shift(f_values, f0_values, y, precision)
    return LogLikelihoodRatio(GAUSS_HETERO, value, f, f0)


def loglr_gauss_vst(fam, f, f0, data):
    """log-LR of unit-variance Gaussian products with means Gamma(f), Gamma(f0)."""

    y = _data(data)
    _same_grid(f, f0, y)
    f_values, f0_values = _values(f), _values(f0)
    check_theta(fam, f_values)
    check_theta(fam, f0_values)
    value = _gaussian_shift(
        fam.gamma(f_values), fam.gamma(f0_values), y, np.ones_like(y)
    )
    return LogLikelihoodRatio(GAUSS_VST, value, f, f0)


def taylor_remainders(fam, f0, g, gamma_star):
    """
    Remainders of the second and first order expansions of the cumulant.

    With f = f0 + gamma_star g:
    R  = sum V(f) - V(f0) - gamma_star g V'(f0) - gamma_star^2 g^2 V''(f0) / 2
    R0 = sum V(f) - V(f0) - gamma_star g V'(f0)

    return
    (R, R0)
    """

    _same_grid(f0, g)
    base, step = _values(f0), gamma_star * _values(g)
    check_theta(fam, base)
    shifted = base + step
    check_theta(fam, shifted)
    first = fam.cumulant(shifted) - fam.cumulant(base) - step * fam.mean(base)
    r0 = float(np.sum(first))
    r = float(np.sum(first - 0.5 * step * step * fam.fisher(base)))
    return r, r0


def remainder_bounds(fam, g, gamma_star, n=None, theta0=None, eps0=None):
    """
    Bounds on |R| and |R0| with L = sup |g|.

    |R|  <= L^3 c gamma_star^3 n / 6, c = sup |V'''| near Theta0
    |R0| <= L^2 I_max gamma_star^2 n / 2
    """

    g_values = _values(g)
    n = g_values.size if n is None else n
    sup_g = float(np.max(np.abs(g_values)))
    c = third_cumulant_bound(fam, theta0, eps0)
    _, i_max = check_regularity(fam, theta0, eps0)
    r_bound = sup_g ** 3 * c * gamma_star ** 3 * n / 6
    r0_bound = sup_g ** 2 * i_max * gamma_star ** 2 * n / 2
    return r_bound, r0_bound
