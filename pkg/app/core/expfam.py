"""Checked operations on exponential families.

Every public function validates its parameter against the open domain of
the family, raises ``DomainError`` otherwise, and returns a float for a
scalar argument or an array for an array argument.
"""

# Native and installed modules
import math
from functools import partial

import numpy as np
import pandas as pd

# Custom modules
import config
from model.family import BUILTIN_FAMILIES, ExpFamilyModel, NaturalParamMap
from model.report import MomentBoundReport
from utils.errors import ConfigError, DomainError

_BY_NAME = {}
for _cls in BUILTIN_FAMILIES:
    _BY_NAME[_cls.key] = _cls
    _BY_NAME[_cls.name.lower()] = _cls
    _BY_NAME[_cls.key.replace("-", "")] = _cls


def get_family(name, theta0=None, eps0=None):
    """
    Build a built-in family by name.

    Keyword arguments:
    name -- "poisson", "gauss-mean", "GaussMean", ... (case-insensitive)
    theta0 -- regular subinterval, defaults to config.yml
    eps0 -- fattening radius, defaults to config.yml

    return
    The ExpFamilyModel instance
    """

    if isinstance(name, ExpFamilyModel):
        return name
    cls = _BY_NAME.get(str(name).strip().lower().replace("_", "-"))
    if cls is None:
        cls = _BY_NAME.get(str(name).strip().lower().replace("_", ""))
    if cls is None:
        known = ", ".join(family_names())
        raise ConfigError(f"family: unknown family {name!r}, expected {known}")
    return cls(theta0=theta0, eps0=eps0)


def family_names():
    return [cls.key for cls in BUILTIN_FAMILIES]


def _wrap(arg, value):
    if np.ndim(arg) == 0:
        return float(value)
    return np.asarray(value, dtype=float)


def _check(ok, fam, what, value, domain):
    ok = np.asarray(ok)
    if ok.all():
        return
    first = np.asarray(value, dtype=float)[~ok].flat[0] if ok.ndim else value
    raise DomainError(
        f"{fam.name}: {what}={float(first)!r} outside the open interval "
        f"{domain}"
    )


def check_theta(fam, theta):
    _check(fam.in_theta(theta), fam, "theta", theta, fam.theta_domain)


def check_lambda(fam, lam):
    _check(fam.in_lambda(lam), fam, "lambda", lam, fam.lambda_domain)


def cumulant(fam, theta):
    check_theta(fam, theta)
    return _wrap(theta, fam.cumulant(theta))


def mean_param(fam, theta):
    check_theta(fam, theta)
    return _wrap(theta, fam.mean(theta))


def fisher_info(fam, theta):
    check_theta(fam, theta)
    return _wrap(theta, fam.fisher(theta))


def third_cumulant(fam, theta):
    check_theta(fam, theta)
    return _wrap(theta, fam.third_cumulant(theta))


def inverse_mean(fam, lam):
    check_lambda(fam, lam)
    return _wrap(lam, fam.inverse_mean(lam))


def vst(fam, lam):
    check_lambda(fam, lam)
    return _wrap(lam, fam.vst(lam))


def vst_inverse(fam, y):
    out = np.asarray(fam.vst_inverse(y), dtype=float)
    if not np.all(fam.in_lambda(out)):
        raise DomainError(f"{fam.name}: F^-1 left Lambda")
    return _wrap(y, out)


def gamma_canonical(fam, theta):
    check_theta(fam, theta)
    return _wrap(theta, fam.gamma(theta))


def gamma_inverse(fam, y):
    out = np.asarray(fam.gamma_inverse(y), dtype=float)
    if not np.all(fam.in_theta(out)):
        raise DomainError(f"{fam.name}: Gamma^-1 left Theta")
    return _wrap(y, out)


def legendre(fam, lam):
    check_lambda(fam, lam)
    return _wrap(lam, fam.legendre(lam))


def natural_map(fam):
    return NaturalParamMap(
        b=partial(mean_param, fam),
        a=partial(inverse_mean, fam),
        legendre=partial(legendre, fam),
        vst=partial(vst, fam),
        gamma=partial(gamma_canonical, fam),
        lambda0=fam.lambda0,
    )


def sample(fam, theta, rng, size=None):
    """Draw from P_theta: one draw per entry of theta, or size draws."""

    check_theta(fam, theta)
    target = np.asarray(theta, dtype=float)
    if size is not None:
        target = np.broadcast_to(target, size).astype(float)
    draws = fam.sample(target, rng)
    if size is None and np.ndim(theta) == 0:
        return float(draws)
    return np.asarray(draws, dtype=float)


def quantile(fam, theta, u):
    check_theta(fam, theta)
    u_arr = np.asarray(u, dtype=float)
    if not np.all((u_arr > 0) & (u_arr < 1)):
        raise DomainError(f"{fam.name}: quantile level must lie in (0, 1)")
    theta_arr, u_arr = np.broadcast_arrays(np.asarray(theta, dtype=float), u_arr)
    out = fam.quantile(theta_arr, u_arr)
    if theta_arr.ndim == 0:
        return float(out)
    return np.asarray(out, dtype=float)


def mean_statistic_sample(fam, theta, n, size, rng):
    """Exact draws of the sample mean of U over n observations at theta."""

    check_theta(fam, theta)
    return np.asarray(fam.mean_statistic(float(theta), int(n), int(size), rng))


def _grid(lo, hi, step):
    count = int(math.ceil((hi - lo) / step - 1e-9)) + 1
    return np.linspace(lo, hi, max(count, 2))


def _fattened(fam, theta0, eps0):
    lo, hi = theta0
    f_lo, f_hi = lo - eps0, hi + eps0
    if not (fam.theta_domain[0] < f_lo and f_hi < fam.theta_domain[1]):
        raise DomainError(
            f"{fam.name}: [{f_lo}, {f_hi}] leaves Theta {fam.theta_domain}"
        )
    return f_lo, f_hi


def fisher_inf(fam, theta0, grid_fraction=None):
    """inf of I over the closed interval theta0, scanned on the regularity grid."""

    lo, hi = theta0
    if not lo <= hi:
        raise DomainError(f"{fam.name}: empty interval [{lo}, {hi}]")
    check_theta(fam, np.array([lo, hi]))
    if lo == hi:
        return float(fam.fisher(lo))
    step = (grid_fraction or config.GRID_FRACTION) * (hi - lo)
    return float(np.min(fam.fisher(_grid(lo, hi, step))))


def check_regularity(fam, theta0=None, eps0=None, grid_fraction=None):
    """
    Scan I over Theta0 and its eps0-fattening.

    The grid step is grid_fraction * |Theta0| (config.yml, 1e-3 by default)
    and both endpoints are always scanned.

    return
    (I_min, I_max): inf of I over Theta0 and sup over the fattened interval
    """

    theta0 = tuple(theta0) if theta0 is not None else fam.theta0
    eps0 = fam.eps0 if eps0 is None else eps0
    step = (grid_fraction or config.GRID_FRACTION) * (theta0[1] - theta0[0])
    f_lo, f_hi = _fattened(fam, theta0, eps0)
    i_min = fisher_inf(fam, theta0, grid_fraction)
    i_max = float(np.max(fam.fisher(_grid(f_lo, f_hi, step))))
    return i_min, i_max


def third_cumulant_bound(fam, theta0=None, eps0=None, grid_fraction=None):
    """sup |V'''| over Theta0 fattened by eps0/2."""

    theta0 = tuple(theta0) if theta0 is not None else fam.theta0
    eps0 = fam.eps0 if eps0 is None else eps0
    step = (grid_fraction or config.GRID_FRACTION) * (theta0[1] - theta0[0])
    f_lo, f_hi = _fattened(fam, theta0, eps0 / 2)
    return float(np.max(np.abs(fam.third_cumulant(_grid(f_lo, f_hi, step)))))


def moment_bound_check(fam, theta0, eps0, t, reps, rng, grid_points=5):
    """
    Monte-Carlo check of E exp{t (U - b(theta))} <= exp{t^2 I_max / 2}.

    The expectation is estimated on a grid over Theta0 and the largest
    estimate is compared with the bound, allowing three standard errors.
    """

    if abs(t) > eps0:
        raise DomainError(f"{fam.name}: |t|={abs(t)} exceeds eps0={eps0}")
    if reps < 2:
        raise ConfigError("reps: at least two replications are needed")
    _, i_max = check_regularity(fam, theta0, eps0)
    bound = math.exp(t * t * i_max / 2)
    best = None
    for theta in np.linspace(theta0[0], theta0[1], grid_points):
        draws = fam.sample(np.full(reps, theta), rng)
        centered = fam.u_stat(draws) - fam.mean(theta)
        values = np.exp(t * centered)
        estimate = float(values.mean())
        se = float(values.std(ddof=1) / math.sqrt(reps))
        if best is None or estimate > best[1]:
            best = (float(theta), estimate, se)
    theta, estimate, se = best
    exact = math.exp(
        float(fam.cumulant(theta + t) - fam.cumulant(theta) - t * fam.mean(theta))
    )
    multiplier = config.ACCEPTANCE["se_multiplier"]
    return MomentBoundReport(
        family=fam.name,
        t=float(t),
        theta=theta,
        estimate=estimate,
        se=se,
        exact=exact,
        bound=bound,
        reps=int(reps),
        passed=bool(estimate <= bound + multiplier * se + 1e-12),
    )


def catalogue(families=None):
    """
    Table of the built-in families: formulas and midpoint values at mid Theta0.

    return
    pandas DataFrame with one row per family
    """

    rows = []
    for fam in families or [cls() for cls in BUILTIN_FAMILIES]:
        mid = fam.midpoint
        lam = float(fam.mean(mid))
        i_min, i_max = check_regularity(fam)
        rows.append(
            {
                "family": fam.name,
                "theta_domain": _interval(fam.theta_domain, closed=False),
                "theta0": _interval(fam.theta0, closed=True),
                "eps0": fam.eps0,
                "U": fam.formulas.get("U", ""),
                "V": fam.formulas.get("V", ""),
                "b": fam.formulas.get("b", ""),
                "I": fam.formulas.get("I", ""),
                "F": fam.formulas.get("F", ""),
                "Gamma": fam.formulas.get("Gamma", ""),
                "theta_mid": mid,
                "V_mid": float(fam.cumulant(mid)),
                "b_mid": lam,
                "I_mid": float(fam.fisher(mid)),
                "F_mid": float(fam.vst(lam)),
                "Gamma_mid": float(fam.gamma(mid)),
                "I_min": i_min,
                "I_max": i_max,
            }
        )
    return pd.DataFrame(rows)


def _interval(bounds, closed):
    left, right = ("[", "]") if closed else ("(", ")")
    return f"{left}{bounds[0]:g}, {bounds[1]:g}{right}"
