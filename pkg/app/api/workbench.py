"""Seeded orchestration of the workbench commands."""

# Native and installed modules
import math
import os
import re

import numpy as np
from jsonschema import Draft7Validator, ValidationError, validate
from scipy import stats

# Custom modules
import config
from core.coupling import growth_exponent, kmt_tail_test, loglr_pair_sampler
from core.estimators import KERNELS, es1_experiment, estimate, nadaraya_watson_values
from core.experiments import (
    loglr_glm,
    simulate_gauss_hetero,
    simulate_gauss_vst,
    simulate_glm,
)
from core.expfam import (
    catalogue,
    family_names,
    gamma_inverse,
    get_family,
    mean_statistic_sample,
    moment_bound_check,
    vst_inverse,
)
from core.funcspace import (
    neighborhood_candidate,
    neighborhood_contains,
    rates,
    sample_holder,
)
from core.metrics import hellinger_mc_blocks, vst_distance_check
from model.coupling_run import DYADIC_BLOCKS, GrowthFitModel, TailFitModel
from model.report import MomentBoundReportModel, Report, SweepResult, SweepRow
from model.run_config import ALMOST_PARAMETRIC, RunConfig
from model.sample import GAUSS_HETERO, GAUSS_VST
from schemas.schemas import run_config_schema
from utils.errors import ConfigError, InvariantError
from utils.shared import log
from utils.utils import is_power_of_two, loglinear_fit, map_blocks, parse_count, parse_n_list
from utils.writer import write_grid_function, write_rows, write_sample, write_summary

FAMILY_FREE = ("families",)
DYADIC_COMMANDS = ("distance-sweep", "coupling")

_ALIASES = {"n": "n_list", "l": "L", "out": "out_dir", "holder_const": "L"}
_PROPERTIES = run_config_schema["properties"]


# Configuration


def _defaults():
    env = config.current()
    return {
        "beta": env.BETA,
        "L": env.HOLDER_CONST,
        "kappa0": config.KAPPA0,
        "n_list": list(env.N_LIST),
        "reps": env.REPS,
        "seed": env.SEED,
        "rate": config.SWEEP_RATE,
        "dict_size": config.COUPLING["dict_size"],
        "workers": env.WORKERS,
        "out_dir": env.OUT_DIR,
        "format": env.FORMAT,
    }


def _key(raw):
    key = raw.strip().lstrip("-").replace("-", "_")
    if key == "L":
        return key
    return _ALIASES.get(key.lower(), key)


def _coerce(key, value):
    """Convert a flag or config-file string to the type the schema expects."""

    if not isinstance(value, str):
        if key == "n_list" and not isinstance(value, list):
            return parse_n_list(value)
        return value
    text = value.strip()
    if key == "n_list":
        return parse_n_list(text)
    if key == "theta0":
        parts = [p for p in re.split(r"[,\s\[\]]+", text) if p]
        try:
            return [float(p) for p in parts]
        except ValueError:
            raise ConfigError(f"theta0={value!r}: expected two numbers 'lo,hi'")
    kinds = _PROPERTIES.get(key, {}).get("type", [])
    kinds = kinds if isinstance(kinds, list) else [kinds]
    if text.lower() in ("none", "null", "") and "null" in kinds:
        return None
    if "boolean" in kinds:
        if text.lower() in ("true", "yes", "1"):
            return True
        if text.lower() in ("false", "no", "0"):
            return False
        raise ConfigError(f"{key}={value!r}: expected true or false")
    if "integer" in kinds:
        return parse_count(text, key) if key != "seed" else int(text)
    if "number" in kinds:
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{key}={value!r}: expected a number")
    return text


def _read_config_file(path):
    """Flat 'key = value' (or 'key: value') lines; '#' starts a comment."""

    if not os.path.isfile(path):
        raise ConfigError(f"config: no such file {path!r}")
    values = {}
    with open(path, "r") as handle:
        for number, line in enumerate(handle, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            match = re.match(r"^([A-Za-z0-9_-]+)\s*[=:]\s*(.*)$", line)
            if not match:
                raise ConfigError(f"{path}:{number}: expected 'key = value'")
            values[_key(match.group(1))] = match.group(2).strip()
    return values


def _parse_argv(argv):
    argv = list(argv)
    if not argv or argv[0].startswith("-"):
        raise ConfigError("command: the first argument must be a command")
    values = {"command": argv[0]}
    tokens = argv[1:]
    index = 0
    while index < len(tokens):
        token = tokens[index]
        if not token.startswith("--"):
            raise ConfigError(f"{token}: expected a --flag")
        name, _, inline = token.partition("=")
        key = _key(name)
        if inline:
            value = inline
            index += 1
        elif index + 1 < len(tokens) and not tokens[index + 1].startswith("--"):
            value = tokens[index + 1]
            index += 2
        else:
            value = "true"
            index += 1
        if key == "config":
            values = dict(_read_config_file(value), **values)
        else:
            values[key] = value
    return values


def parse_config(source):
    """
    Validate the options of a command and fill in the defaults.

    Keyword arguments:
    source -- a mapping, an argv list such as
              ["distance-sweep", "--family", "poisson", "--n", "256..8192"],
              or the path of a flat key = value config file

    return
    The RunConfig
    """

    if isinstance(source, dict):
        raw = {_key(k): v for k, v in source.items() if v is not None or k == "family"}
    elif isinstance(source, (list, tuple)):
        raw = _parse_argv(source)
    else:
        raw = _read_config_file(str(source))
    if "config" in raw:
        raw = dict(_read_config_file(raw.pop("config")), **raw)
    values = _defaults()
    values.update({key: _coerce(key, value) for key, value in raw.items()})
    try:
        validate(instance=values, schema=run_config_schema, cls=Draft7Validator)
    except ValidationError as error:
        key = ".".join(str(p) for p in error.absolute_path) or "config"
        raise ConfigError(f"{key}: {error.message}")

    command = values["command"]
    if not values["beta"] > 0.5:
        raise ConfigError(f"beta={values['beta']}: the rates require beta > 1/2")
    if command not in FAMILY_FREE and not values.get("family"):
        raise ConfigError(f"family: required by the {command} command")
    if values.get("family"):
        get_family(values["family"], values.get("theta0"), values.get("eps0"))
    values["n_list"] = sorted(values["n_list"])
    if command in DYADIC_COMMANDS:
        odd = [n for n in values["n_list"] if not is_power_of_two(n)]
        if odd:
            raise ConfigError(f"n_list: {odd} are not powers of two")
    if values.get("theta0") is not None:
        values["theta0"] = tuple(values["theta0"])
    return RunConfig(**values)


def _family(cfg):
    return get_family(cfg.family, cfg.theta0, cfg.eps0)


# Commands


def run_families(cfg):
    """
    Catalogue of the built-in families, each with the Monte-Carlo check of
    its exponential moment bound at t = +eps0/2 and t = -eps0/2.
    """

    families = [_family(cfg)] if cfg.family else [get_family(key) for key in family_names()]
    frame = catalogue(families)
    checks = []
    for index, fam in enumerate(families):
        for side, t in enumerate((fam.eps0 / 2, -fam.eps0 / 2)):
            rng = np.random.default_rng([cfg.seed, index, side])
            report = moment_bound_check(fam, fam.theta0, fam.eps0, t, cfg.reps, rng)
            if not report.passed:
                log.warning("%s: moment bound exceeded at theta=%.4g, t=%.4g",
                            fam.name, report.theta, t)
            checks.append(MomentBoundReportModel().dump(report))
    return Report(
        command="families",
        family=cfg.family,
        passed=all(check["passed"] for check in checks),
        summary={"families": len(frame), "moment_checks": checks},
        rows=frame.to_dict(orient="records"),
    )


def run_simulate(cfg):
    """One seeded draw of f0 from Sigma and of the selected experiment."""

    fam = _family(cfg)
    n = cfg.n
    f0 = sample_holder(cfg.beta, cfg.L, fam.theta0, n, cfg.seed)
    if cfg.kind == GAUSS_HETERO:
        sample = simulate_gauss_hetero(fam, f0, f0, cfg.seed)
    elif cfg.kind == GAUSS_VST:
        sample = simulate_gauss_vst(fam, f0, cfg.seed)
    else:
        sample = simulate_glm(fam, f0, cfg.seed)
    rate_set = rates(n, cfg.beta, cfg.kappa0, cfg.kappa0_star)
    f = neighborhood_candidate(f0, rate_set.gamma_n, fam.theta0, [cfg.seed, 1])
    summary = {"n": n, "kind": cfg.kind, "f0": f0.digest(), "gamma_n": rate_set.gamma_n}
    if sample.kind == "Glm":
        summary["loglr_candidate"] = loglr_glm(fam, f, f0, sample).value
    rows = [
        {"t": t, "f0": value, "x": x}
        for t, value, x in zip(f0.t.tolist(), f0.values.tolist(), sample.data.tolist())
    ]
    return Report(
        command="simulate",
        family=fam.name,
        passed=True,
        summary=summary,
        rows=rows,
        artifacts={"sample": sample, "f0": f0},
    )


def _sweep_rate(n, beta):
    return n ** (-(2 * beta - 1) / (2 * beta + 1)) * math.log(n) ** (
        (14 * beta + 5) / (2 * beta + 1)
    )


def _local_rate(n):
    return math.log(n) ** 7 / n


def run_distance_sweep(cfg):
    """
    Hellinger distance between the regression experiment and an
    accompanying Gaussian experiment along n.

    For every n, f0 is drawn from Sigma and f is the worst-case bump
    candidate; both local log-LRs are evaluated on the dyadic coupling and
    compared by Monte-Carlo, directly and through the product bound over the
    doubly-local blocks.

    With rate=global the candidate sits at distance gamma_n and the partner
    is the heteroscedastic experiment; the distances must decrease along n.
    With rate=almost-parametric it sits at the local rate gamma_n*, the
    partner is the variance-stable experiment, and h2 n / (log n)^7 must not
    grow along n.
    """

    fam = _family(cfg)
    acceptance = config.ACCEPTANCE
    local = cfg.rate == ALMOST_PARAMETRIC
    partner = GAUSS_VST if local else GAUSS_HETERO
    measured = []
    for n in cfg.n_list:
        rate_set = rates(n, cfg.beta, cfg.kappa0, cfg.kappa0_star)
        if not rate_set.splitting_ok:
            log.warning("n=%d: block counts leave the doubly-local bounds", n)
        if rate_set.gamma_n > rate_set.gamma_star_block:
            log.warning("n=%d: gamma_n exceeds the block-level local rate", n)
        radius = rate_set.gamma_star if local else rate_set.gamma_n
        f0 = sample_holder(cfg.beta, cfg.L, fam.theta0, n, [cfg.seed, n])
        f = neighborhood_candidate(f0, radius, fam.theta0, [cfg.seed, n, 1])
        if not neighborhood_contains(f0, f, radius):
            raise InvariantError(
                f"n={n}: candidate leaves the neighbourhood of radius {radius:.4g}"
            )
        sampler = loglr_pair_sampler(fam, f0, f, DYADIC_BLOCKS, rate_set, partner)
        result = hellinger_mc_blocks(sampler, cfg.reps, [cfg.seed, n], workers=cfg.workers)
        log.info("n=%d h2=%.4g se=%.2g", n, result.total.h2, result.total.se)
        measured.append((n, rate_set, radius, result))

    ns = np.array(cfg.n_list, dtype=float)
    h2 = np.array([r.total.h2 for _, _, _, r in measured])
    se = np.array([r.total.se for _, _, _, r in measured])
    slope, intercept, _, slope_se = loglinear_fit(ns, h2)
    if len(ns) > 2 and not math.isnan(slope_se):
        half_width = stats.t.ppf(0.975, len(ns) - 2) * slope_se
    else:
        half_width = 0.0
    if local:
        reference = np.array([_local_rate(n) for n in cfg.n_list])
        theory_exponent = -1.0
    else:
        reference = np.array([_sweep_rate(n, cfg.beta) for n in cfg.n_list])
        theory_exponent = -(2 * cfg.beta - 1) / (2 * cfg.beta + 1)
    leading = float(np.max(h2 / reference))
    rows = [
        SweepRow(
            n=n,
            h2=result.total.h2,
            se=result.total.se,
            theory_bound=leading * bound,
            slope_fit=math.exp(intercept) * n ** slope if not math.isnan(slope) else math.nan,
            radius=radius,
            m=rate_set.m,
            n_k_min=int(rate_set.n_k.min()),
            n_k_max=int(rate_set.n_k.max()),
            splitting_ok=rate_set.splitting_ok,
            product_bound=result.product_bound,
            product_se=result.product_se,
            local_rate=_local_rate(n),
            h2_local=result.total.h2 / _local_rate(n),
        )
        for (n, rate_set, radius, result), bound in zip(measured, reference)
    ]
    null_model = bool(fam.gaussian_shift)
    spread = acceptance["decrease_se_multiplier"]
    if null_model:
        passed = bool(np.all(h2 <= acceptance["se_multiplier"] * se + 1e-12))
    elif local:
        scaled = h2 / reference
        scaled_se = se / reference
        bounded = bool(
            np.all(scaled[1:] - scaled[0] < spread * np.hypot(scaled_se[0], scaled_se[1:]))
        )
        passed = bool(len(ns) > 1 and bounded)
    else:
        noise = spread * np.sqrt(se[:-1] ** 2 + se[1:] ** 2)
        no_rise = bool(np.all(h2[1:] - h2[:-1] < noise))
        overall = bool(h2[0] - h2[-1] > spread * math.hypot(se[0], se[-1]))
        passed = bool(
            len(ns) > 1
            and not math.isnan(slope)
            and slope <= acceptance["max_sweep_slope"]
            and no_rise
            and overall
        )
    return SweepResult(
        family=fam.name,
        beta=cfg.beta,
        rows=rows,
        theory_exponent=theory_exponent,
        slope=slope,
        slope_ci=(slope - half_width, slope + half_width),
        leading_constant=leading,
        passed=passed,
        null_model=null_model,
        rate=cfg.rate,
    )


def run_vst_clt(cfg):
    """
    sqrt(n) (F(S_n) - F(b(theta))) for S_n the mean of U over n draws, on
    three points of Theta0 (or at --theta), against N(0, 1).
    """

    fam = _family(cfg)
    thetas = [cfg.theta] if cfg.theta is not None else [
        fam.theta0[0], fam.midpoint, fam.theta0[1]
    ]
    n = cfg.n
    acceptance = config.ACCEPTANCE
    low, high = acceptance["vst_variance"]
    rows = []
    for index, theta in enumerate(thetas):
        rng = np.random.default_rng([cfg.seed, index])
        means = mean_statistic_sample(fam, theta, n, cfg.reps, rng)
        with np.errstate(divide="ignore"):
            z = math.sqrt(n) * (fam.vst(means) - fam.vst(fam.mean(theta)))
        variance = float(np.var(z, ddof=1))
        ks = float(stats.kstest(z, "norm").statistic)
        rows.append(
            {
                "theta": float(theta),
                "n": n,
                "reps": cfg.reps,
                "variance": variance,
                "variance_se": variance * math.sqrt(2 / (cfg.reps - 1)),
                "ks": ks,
                "passed": bool(low <= variance <= high and ks <= acceptance["vst_ks"]),
            }
        )
        log.info("theta=%.4g variance=%.4g ks=%.4g", theta, variance, ks)
    return Report(
        command="vst-clt",
        family=fam.name,
        passed=all(row["passed"] for row in rows),
        summary={"n": n, "reps": cfg.reps, "thetas": len(rows)},
        rows=rows,
    )


def run_coupling(cfg):
    """Tail test at the largest n, growth runs along n_list when it has two sizes or more."""

    fam = _family(cfg)
    theta = fam.midpoint if cfg.theta is None else cfg.theta
    tail = kmt_tail_test(fam, theta, cfg.n, cfg.dict_size, cfg.reps, cfg.seed,
                         cfg.L, workers=cfg.workers)
    summary = dict(TailFitModel().dump(tail))
    passed = tail.passed
    if len(cfg.n_list) > 1:
        acceptance = config.ACCEPTANCE
        coupled = growth_exponent(fam, theta, cfg.n_list, cfg.reps, cfg.seed, True,
                                  cfg.dict_size, cfg.L, cfg.workers)
        control = growth_exponent(fam, theta, cfg.n_list, cfg.reps, cfg.seed, False,
                                  cfg.dict_size, cfg.L, cfg.workers)
        low, high = acceptance["growth_uncoupled"]
        summary["growth_coupled"] = GrowthFitModel().dump(coupled)
        summary["growth_uncoupled"] = GrowthFitModel().dump(control)
        passed = bool(
            passed
            and coupled.exponent < acceptance["growth_coupled_max"]
            and low <= control.exponent <= high
        )
    return Report(command="coupling", family=fam.name, passed=passed,
                  summary=summary, rows=tail.rows())


def run_estimate(cfg):
    fam = _family(cfg)
    return es1_experiment(fam, cfg.beta, cfg.L, cfg.n_list, cfg.reps, cfg.seed,
                          kappa0=cfg.kappa0, noise=cfg.noise, workers=cfg.workers)


def run_transfer(cfg):
    """
    MISE of the estimator on regression data against the same smoother run
    in the Gamma scale on the variance-stable Gaussian data, then inverted.

    Both arms use the same f and the same seeds. The ratio is MISE(vst) /
    MISE(direct) with a delta-method interval on its logarithm. The same
    comparison in the mean scale, through b and F^-1, is reported next to it.
    """

    if not 0.5 < cfg.beta < 1:
        raise ConfigError(f"beta={cfg.beta}: the transfer demo needs 1/2 < beta < 1")
    if cfg.reps < 2:
        raise ConfigError("reps: the transfer demo needs at least 2 replications")
    fam = _family(cfg)
    n = cfg.n
    kernel = KERNELS[config.ESTIMATOR["kernel"]]()
    delta_n = rates(n, cfg.beta, cfg.kappa0, cfg.kappa0_star).delta_n
    gamma_lo, gamma_hi = (float(fam.gamma(v)) for v in fam.theta0)

    def replicate(rep):
        f = sample_holder(cfg.beta, cfg.L, fam.theta0, n, [cfg.seed, rep, 0])
        direct = estimate(simulate_glm(fam, f, [cfg.seed, rep, 1]), fam, delta_n, kernel)
        vst_sample = simulate_gauss_vst(fam, f, [cfg.seed, rep, 1])
        smoothed, _ = nadaraya_watson_values(vst_sample.data, kernel, delta_n)
        clipped = np.clip(smoothed, gamma_lo, gamma_hi)
        back = gamma_inverse(fam, clipped)
        target = fam.mean(f.values)
        return {
            "rep": rep,
            "mise_direct": float(np.mean(np.square(direct.f_star.values - f.values))),
            "mise_vst": float(np.mean(np.square(back - f.values))),
            "mise_mean_direct": float(np.mean(np.square(direct.g_starstar.values - target))),
            "mise_mean_vst": float(np.mean(np.square(vst_inverse(fam, clipped) - target))),
        }

    rows = map_blocks(replicate, range(cfg.reps), cfg.workers)
    direct = np.array([row["mise_direct"] for row in rows])
    vst = np.array([row["mise_vst"] for row in rows])
    ratio = float(vst.mean() / direct.mean())
    cov = np.cov(np.vstack([direct, vst]))
    reps = len(rows)
    log_var = (
        cov[1, 1] / vst.mean() ** 2
        + cov[0, 0] / direct.mean() ** 2
        - 2 * cov[0, 1] / (vst.mean() * direct.mean())
    ) / reps
    spread = 1.959963984540054 * math.sqrt(max(log_var, 0.0))
    ci = (ratio * math.exp(-spread), ratio * math.exp(spread))
    mean_direct = float(np.mean([row["mise_mean_direct"] for row in rows]))
    mean_vst = float(np.mean([row["mise_mean_vst"] for row in rows]))
    acceptance = config.ACCEPTANCE
    if fam.gaussian_shift:
        low, high = acceptance["transfer_gauss_ratio"]
        passed = low <= ratio <= high
    else:
        passed = ci[1] - ci[0] < acceptance["transfer_ci_width"]
    return Report(
        command="transfer",
        family=fam.name,
        passed=bool(passed),
        summary={
            "n": n,
            "reps": reps,
            "mise_direct": float(direct.mean()),
            "mise_vst": float(vst.mean()),
            "ratio": ratio,
            "ratio_ci_low": ci[0],
            "ratio_ci_high": ci[1],
            "ci_width": ci[1] - ci[0],
            "mise_mean_direct": mean_direct,
            "mise_mean_vst": mean_vst,
            "mean_ratio": mean_vst / mean_direct if mean_direct > 0 else math.nan,
        },
        rows=rows,
    )


def run_vst_distance(cfg):
    fam = _family(cfg)
    return vst_distance_check(fam, cfg.n, cfg.beta, cfg.pairs, cfg.seed, cfg.L, cfg.kappa0)


RUNS = {
    "families": run_families,
    "simulate": run_simulate,
    "distance-sweep": run_distance_sweep,
    "vst-clt": run_vst_clt,
    "coupling": run_coupling,
    "estimate": run_estimate,
    "transfer": run_transfer,
    "vst-distance": run_vst_distance,
}


def run(cfg):
    """Run the command of cfg and return its Report."""

    log.info("%s %s (config %s)", cfg.command, cfg.family or "", cfg.hash[:12])
    result = RUNS[cfg.command](cfg)
    if isinstance(result, SweepResult):
        result = result.to_report()
    return result


def persist(cfg, report):
    """
    Write the rows and the JSON summary of a report under cfg.out_dir.

    return
    The list of written paths
    """

    stem = cfg.command if not cfg.family else f"{cfg.command}-{_family(cfg).key}"
    base = os.path.join(cfg.out_dir, stem)
    paths = [
        write_rows(f"{base}.{cfg.format}" if cfg.format == "csv" else f"{base}-rows.json",
                   report.rows, cfg),
        write_summary(f"{base}.summary.json", report, cfg),
    ]
    if "sample" in report.artifacts:
        paths.extend(write_sample(f"{base}-sample.csv", report.artifacts["sample"]))
        write_grid_function(f"{base}-f0.csv", report.artifacts["f0"])
        paths.append(f"{base}-f0.csv")
    return paths
