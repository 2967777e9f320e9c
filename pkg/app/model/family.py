"""Canonical one-parameter exponential families.

A family is written P_theta(dx) = exp{theta U(x) - V(theta)} mu(dx). Methods
work elementwise on numpy arrays and do not validate their arguments; the
checked entry points live in ``core.expfam``.
"""

# Native and installed modules
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy import integrate, optimize, special, stats

# Custom modules
import config
from utils.errors import ConfigError, NumericalError

INF = math.inf
_MAX_BRACKET_STEPS = 200


def uniform_from_normal(z):
    """Map standard normal draws to (0, 1), keeping clear of both ends."""

    u = special.ndtr(z)
    return np.clip(u, np.finfo(float).tiny, np.nextafter(1.0, 0.0))


class ExpFamilyModel(ABC):
    """One canonical exponential family with a regular subinterval Theta0.

    Subclasses give U, V, V', V'', the sampler and the quantile function.
    The inverse mean map, the variance-stabilizing transform and V''' fall
    back to numerical versions, which is what user-defined families get.
    """

    name = None
    key = None
    theta_domain = (-INF, INF)
    lambda_domain = (-INF, INF)
    discrete = False
    # U(X) - b(theta) is exactly N(0, I(theta)) under the quantile coupling
    gaussian_shift = False
    formulas = {}

    def __init__(self, theta0=None, eps0=None):
        defaults = config.FAMILIES.get(self.key, {})
        theta0 = theta0 if theta0 is not None else defaults.get("theta0")
        eps0 = eps0 if eps0 is not None else defaults.get("eps0", 0.1)
        if theta0 is None:
            raise ConfigError(f"{self.name}: no regular subinterval theta0")
        lo, hi = float(theta0[0]), float(theta0[1])
        if not lo < hi:
            raise ConfigError(
                f"{self.name}: theta0 must satisfy lo < hi, got [{lo}, {hi}]"
            )
        if not (self.theta_domain[0] < lo and hi < self.theta_domain[1]):
            raise ConfigError(
                f"{self.name}: theta0 [{lo}, {hi}] is not inside "
                f"Theta {self.theta_domain}"
            )
        if not eps0 > 0:
            raise ConfigError(f"{self.name}: eps0 must be positive")
        self.theta0 = (lo, hi)
        self.eps0 = float(eps0)

    def __repr__(self):
        return f"{type(self).__name__}(theta0={self.theta0}, eps0={self.eps0})"

    # Cumulant calculus

    @abstractmethod
    def u_stat(self, x):
        """Sufficient statistic U(x)."""

    @abstractmethod
    def cumulant(self, theta):
        """V(theta)."""

    @abstractmethod
    def mean(self, theta):
        """b(theta) = V'(theta)."""

    @abstractmethod
    def fisher(self, theta):
        """I(theta) = V''(theta)."""

    def third_cumulant(self, theta):
        h = 1e-4
        theta = np.asarray(theta, dtype=float)
        return (self.fisher(theta + h) - self.fisher(theta - h)) / (2 * h)

    def inverse_mean(self, lam):
        """a(lambda) by bracketed root finding on b(theta) = lambda."""

        lam = np.asarray(lam, dtype=float)
        out = np.vectorize(self._solve_mean, otypes=[float])(lam)
        return out if out.ndim else float(out)

    def _solve_mean(self, lam):
        lo, hi = self.theta0
        dom_lo, dom_hi = self.theta_domain
        step = hi - lo
        # widen the bracket geometrically, halving towards finite endpoints
        for _ in range(_MAX_BRACKET_STEPS):
            if self.mean(lo) <= lam:
                break
            lo = (dom_lo + lo) / 2 if dom_lo > -INF else lo - step
            step *= 2
        step = hi - lo
        for _ in range(_MAX_BRACKET_STEPS):
            if self.mean(hi) >= lam:
                break
            hi = (dom_hi + hi) / 2 if dom_hi < INF else hi + step
            step *= 2
        if not self.mean(lo) <= lam <= self.mean(hi):
            raise NumericalError(f"{self.name}: cannot bracket a({lam})")
        return optimize.brentq(
            lambda t: self.mean(t) - lam, lo, hi, xtol=config.BISECTION_TOL
        )

    def vst(self, lam):
        """F(lambda), integrating F'(s) = I(a(s))^(-1/2) from b(mid Theta0)."""

        ref = self.mean(sum(self.theta0) / 2)

        def one(x):
            value, _ = integrate.quad(
                lambda s: 1.0 / math.sqrt(self.fisher(self.inverse_mean(s))),
                ref,
                x,
            )
            return value

        lam = np.asarray(lam, dtype=float)
        out = np.vectorize(one, otypes=[float])(lam)
        return out if out.ndim else float(out)

    def vst_inverse(self, y):
        y = np.asarray(y, dtype=float)

        def one(v):
            return optimize.brentq(
                lambda s: self.vst(s) - v,
                *self._lambda_bracket(),
                xtol=config.BISECTION_TOL,
            )

        out = np.vectorize(one, otypes=[float])(y)
        return out if out.ndim else float(out)

    def _lambda_bracket(self):
        lo, hi = self.theta0
        dom_lo, dom_hi = self.theta_domain
        pad = 10 * (hi - lo)
        lo = lo - pad if dom_lo == -INF else (dom_lo + lo) / 2
        hi = hi + pad if dom_hi == INF else (dom_hi + hi) / 2
        return float(self.mean(lo)), float(self.mean(hi))

    def gamma(self, theta):
        """Gamma(theta) = F(b(theta))."""

        return self.vst(self.mean(theta))

    def gamma_inverse(self, y):
        return self.inverse_mean(self.vst_inverse(y))

    def legendre(self, lam):
        """T(lambda) = lambda a(lambda) - V(a(lambda)), so that T' = a."""

        theta = self.inverse_mean(lam)
        return np.asarray(lam) * theta - self.cumulant(theta)

    # Sampling

    @abstractmethod
    def sample(self, theta, rng):
        """One draw X ~ P_theta per entry of the array theta."""

    @abstractmethod
    def quantile(self, theta, u):
        """Generalized inverse of the distribution function of X."""

    def law(self, theta):
        """Frozen scipy distribution of X at a scalar theta, if one exists."""

        return None

    def couple_from_normal(self, theta, z):
        """Quantile transform of a standard normal z into X ~ P_theta."""

        return self.quantile(theta, uniform_from_normal(z))

    def mean_statistic(self, theta, n, size, rng):
        """Draws of n^-1 sum U(X_i) for n i.i.d. observations at theta."""

        draws = self.sample(np.full((size, n), float(theta)), rng)
        return self.u_stat(draws).mean(axis=1)

    def from_statistic(self, u, z):
        """Observation whose sufficient statistic is u (z breaks symmetry)."""

        return u

    # Domain helpers

    def in_theta(self, theta):
        theta = np.asarray(theta, dtype=float)
        return (theta > self.theta_domain[0]) & (theta < self.theta_domain[1])

    def in_lambda(self, lam):
        lam = np.asarray(lam, dtype=float)
        return (lam > self.lambda_domain[0]) & (lam < self.lambda_domain[1])

    @property
    def lambda0(self):
        """Lambda0 = b(Theta0); b is increasing."""

        return float(self.mean(self.theta0[0])), float(self.mean(self.theta0[1]))

    @property
    def midpoint(self):
        return sum(self.theta0) / 2


class GaussMean(ExpFamilyModel):
    name = "GaussMean"
    key = "gauss-mean"
    gaussian_shift = True
    formulas = {
        "U": "x",
        "V": "theta^2/2",
        "b": "theta",
        "I": "1",
        "F": "lambda",
        "Gamma": "theta",
    }

    def u_stat(self, x):
        return np.asarray(x, dtype=float)

    def cumulant(self, theta):
        return np.square(theta) / 2

    def mean(self, theta):
        return np.asarray(theta, dtype=float) * 1.0

    def fisher(self, theta):
        return np.ones_like(np.asarray(theta, dtype=float))

    def third_cumulant(self, theta):
        return np.zeros_like(np.asarray(theta, dtype=float))

    def inverse_mean(self, lam):
        return np.asarray(lam, dtype=float) * 1.0

    def vst(self, lam):
        return np.asarray(lam, dtype=float) * 1.0

    def vst_inverse(self, y):
        return np.asarray(y, dtype=float) * 1.0

    def gamma(self, theta):
        return np.asarray(theta, dtype=float) * 1.0

    def gamma_inverse(self, y):
        return np.asarray(y, dtype=float) * 1.0

    def sample(self, theta, rng):
        theta = np.asarray(theta, dtype=float)
        return theta + rng.standard_normal(theta.shape)

    def quantile(self, theta, u):
        return np.asarray(theta, dtype=float) + special.ndtri(u)

    def law(self, theta):
        return stats.norm(loc=theta)

    def couple_from_normal(self, theta, z):
        return np.asarray(theta, dtype=float) + z

    def mean_statistic(self, theta, n, size, rng):
        return theta + rng.standard_normal(size) / math.sqrt(n)


class GaussVar(ExpFamilyModel):
    """Centered normal observations with variance -1/theta; U(x) = x^2/2."""

    name = "GaussVar"
    key = "gauss-var"
    theta_domain = (-INF, 0.0)
    lambda_domain = (0.0, INF)
    # U(X) ~ Gamma(shape 1/2, scale -1/theta)
    gamma_shape = 0.5
    formulas = {
        "U": "x^2/2",
        "V": "-log(-theta/(2 pi))/2",
        "b": "-1/(2 theta)",
        "I": "1/(2 theta^2)",
        "F": "log(lambda)/sqrt(2)",
        "Gamma": "log(-1/(2 theta))/sqrt(2)",
    }

    def u_stat(self, x):
        return np.square(x) / 2

    def cumulant(self, theta):
        return -0.5 * np.log(-np.asarray(theta, dtype=float) / (2 * math.pi))

    def mean(self, theta):
        return -0.5 / np.asarray(theta, dtype=float)

    def fisher(self, theta):
        return 0.5 / np.square(theta)

    def third_cumulant(self, theta):
        return -1.0 / np.power(theta, 3)

    def inverse_mean(self, lam):
        return -0.5 / np.asarray(lam, dtype=float)

    def vst(self, lam):
        return np.log(lam) / math.sqrt(2)

    def vst_inverse(self, y):
        return np.exp(math.sqrt(2) * np.asarray(y, dtype=float))

    def gamma(self, theta):
        return np.log(-0.5 / np.asarray(theta, dtype=float)) / math.sqrt(2)

    def gamma_inverse(self, y):
        return -0.5 * np.exp(-math.sqrt(2) * np.asarray(y, dtype=float))

    def scale(self, theta):
        return -1.0 / np.asarray(theta, dtype=float)

    def sample(self, theta, rng):
        theta = np.asarray(theta, dtype=float)
        return np.sqrt(self.scale(theta)) * rng.standard_normal(theta.shape)

    def quantile(self, theta, u):
        return np.sqrt(self.scale(theta)) * special.ndtri(u)

    def law(self, theta):
        return stats.norm(scale=math.sqrt(self.scale(theta)))

    def couple_from_normal(self, theta, z):
        return np.sqrt(self.scale(theta)) * z

    def mean_statistic(self, theta, n, size, rng):
        total = rng.gamma(n * self.gamma_shape, self.scale(theta), size)
        return total / n

    def from_statistic(self, u, z):
        return np.where(z < 0, -1.0, 1.0) * np.sqrt(2 * np.asarray(u))


class Poisson(ExpFamilyModel):
    name = "Poisson"
    key = "poisson"
    lambda_domain = (0.0, INF)
    discrete = True
    formulas = {
        "U": "x",
        "V": "exp(theta)",
        "b": "exp(theta)",
        "I": "exp(theta)",
        "F": "2 sqrt(lambda)",
        "Gamma": "2 exp(theta/2)",
    }

    def u_stat(self, x):
        return np.asarray(x, dtype=float)

    def cumulant(self, theta):
        return np.exp(theta)

    def mean(self, theta):
        return np.exp(theta)

    def fisher(self, theta):
        return np.exp(theta)

    def third_cumulant(self, theta):
        return np.exp(theta)

    def inverse_mean(self, lam):
        return np.log(lam)

    def vst(self, lam):
        return 2 * np.sqrt(lam)

    def vst_inverse(self, y):
        return np.square(np.asarray(y, dtype=float) / 2)

    def gamma(self, theta):
        return 2 * np.exp(np.asarray(theta, dtype=float) / 2)

    def gamma_inverse(self, y):
        return 2 * np.log(np.asarray(y, dtype=float) / 2)

    def sample(self, theta, rng):
        return np.asarray(rng.poisson(np.exp(theta)), dtype=float)

    def quantile(self, theta, u):
        return stats.poisson.ppf(u, np.exp(theta))

    def law(self, theta):
        return stats.poisson(math.exp(theta))

    def mean_statistic(self, theta, n, size, rng):
        return rng.poisson(n * math.exp(theta), size) / n


class Bernoulli(ExpFamilyModel):
    name = "Bernoulli"
    key = "bernoulli"
    lambda_domain = (0.0, 1.0)
    discrete = True
    formulas = {
        "U": "x",
        "V": "log(1 + exp(theta))",
        "b": "exp(theta)/(1 + exp(theta))",
        "I": "exp(theta)/(1 + exp(theta))^2",
        "F": "2 arcsin(sqrt(lambda))",
        "Gamma": "2 arcsin(sqrt(exp(theta)/(1 + exp(theta))))",
    }

    def u_stat(self, x):
        return np.asarray(x, dtype=float)

    def cumulant(self, theta):
        return np.logaddexp(0.0, theta)

    def mean(self, theta):
        return special.expit(theta)

    def fisher(self, theta):
        p = special.expit(theta)
        return p * (1 - p)

    def third_cumulant(self, theta):
        p = special.expit(theta)
        return p * (1 - p) * (1 - 2 * p)

    def inverse_mean(self, lam):
        return special.logit(lam)

    def vst(self, lam):
        return 2 * np.arcsin(np.sqrt(lam))

    def vst_inverse(self, y):
        return np.square(np.sin(np.asarray(y, dtype=float) / 2))

    def gamma(self, theta):
        return 2 * np.arcsin(np.sqrt(special.expit(theta)))

    def sample(self, theta, rng):
        theta = np.asarray(theta, dtype=float)
        return (rng.random(theta.shape) < special.expit(theta)).astype(float)

    def quantile(self, theta, u):
        p = special.expit(theta)
        return np.where(np.asarray(u) > 1 - p, 1.0, 0.0)

    def law(self, theta):
        return stats.bernoulli(float(special.expit(theta)))

    def couple_from_normal(self, theta, z):
        threshold = -special.ndtri(special.expit(theta))
        return np.where(z > threshold, 1.0, 0.0)

    def mean_statistic(self, theta, n, size, rng):
        return rng.binomial(n, special.expit(theta), size) / n


class Exponential(ExpFamilyModel):
    """Exponential law with rate -theta; U(x) = x, V(theta) = -log(-theta)."""

    name = "Exponential"
    key = "exponential"
    theta_domain = (-INF, 0.0)
    lambda_domain = (0.0, INF)
    gamma_shape = 1.0
    formulas = {
        "U": "x",
        "V": "-log(-theta)",
        "b": "-1/theta",
        "I": "1/theta^2",
        "F": "log(lambda)",
        "Gamma": "log(-1/theta)",
    }

    def u_stat(self, x):
        return np.asarray(x, dtype=float)

    def cumulant(self, theta):
        return -np.log(-np.asarray(theta, dtype=float))

    def mean(self, theta):
        return -1.0 / np.asarray(theta, dtype=float)

    def fisher(self, theta):
        return 1.0 / np.square(theta)

    def third_cumulant(self, theta):
        return -2.0 / np.power(theta, 3)

    def inverse_mean(self, lam):
        return -1.0 / np.asarray(lam, dtype=float)

    def vst(self, lam):
        return np.log(lam)

    def vst_inverse(self, y):
        return np.exp(y)

    def gamma(self, theta):
        return -np.log(-np.asarray(theta, dtype=float))

    def gamma_inverse(self, y):
        return -np.exp(-np.asarray(y, dtype=float))

    def scale(self, theta):
        return -1.0 / np.asarray(theta, dtype=float)

    def sample(self, theta, rng):
        theta = np.asarray(theta, dtype=float)
        return -np.log1p(-rng.random(theta.shape)) * self.scale(theta)

    def quantile(self, theta, u):
        return -np.log1p(-np.asarray(u, dtype=float)) * self.scale(theta)

    def law(self, theta):
        return stats.expon(scale=float(self.scale(theta)))

    def couple_from_normal(self, theta, z):
        # 1 - Phi(z) = Phi(-z), evaluated in the log domain
        return -special.log_ndtr(-np.asarray(z, dtype=float)) * self.scale(theta)

    def mean_statistic(self, theta, n, size, rng):
        total = rng.gamma(n * self.gamma_shape, self.scale(theta), size)
        return total / n


BUILTIN_FAMILIES = (GaussMean, GaussVar, Poisson, Bernoulli, Exponential)


@dataclass(frozen=True)
class NaturalParamMap:
    """The maps between canonical and natural parameters of one family."""

    b: Callable
    a: Callable
    legendre: Callable
    vst: Callable
    gamma: Callable
    lambda0: Tuple[float, float]
