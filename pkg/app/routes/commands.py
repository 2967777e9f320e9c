# Native and installed modules
import json

import click

# Custom modules
from api.workbench import parse_config, persist, run
from core.expfam import family_names
from utils.errors import WorkbenchError
from utils.shared import log
from utils.writer import format_summary, format_table

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_FAILED = 2

_OPTIONS = [
    click.option("--family", help=f"Family key: {', '.join(family_names())}."),
    click.option("--beta", type=float, help="Hoelder exponent, beta > 1/2 (default 0.75)."),
    click.option("--L", "L", type=float, help="Hoelder constant (default 1)."),
    click.option("--kappa0", type=float, help="Constant of the global rate (default 1)."),
    click.option("--kappa0-star", type=float, help="Constant of the local rate (default 4 kappa0)."),
    click.option("--n", "--n-list", "n", help="Sample sizes: 'a..b' (powers of two), 'a,b,c' or one value."),
    click.option("--reps", help="Monte-Carlo replications."),
    click.option("--seed", type=int, help="Master seed (default 0)."),
    click.option("--theta", type=float, help="Constant canonical parameter."),
    click.option("--theta0", help="Regular subinterval 'lo,hi' of the canonical parameter."),
    click.option("--eps0", type=float, help="Fattening radius of theta0."),
    click.option("--workers", type=int, help="Thread pool size."),
    click.option("--out", "out_dir", help="Output directory (default results)."),
    click.option("--format", "format_", type=click.Choice(["csv", "json"]), help="Row format."),
    click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
                 help="Flat key = value file; flags override it."),
]


def shared_options(extra=()):
    def decorate(func):
        for option in reversed(list(extra) + _OPTIONS):
            func = option(func)
        return func

    return decorate


def execute(command, options):
    """Validate, run and persist one command; return the exit code."""

    options = dict(options)
    raw = {key: value for key, value in options.items() if value is not None}
    raw["command"] = command
    if "format_" in raw:
        raw["format"] = raw.pop("format_")
    if "config_file" in raw:
        raw["config"] = raw.pop("config_file")
    try:
        cfg = parse_config(raw)
        report = run(cfg)
        paths = persist(cfg, report)
    except WorkbenchError as error:
        log.error("%s", error)
        log.debug("traceback", exc_info=True)
        click.echo(json.dumps(error.to_dict(), sort_keys=True), err=True)
        return EXIT_ERROR
    except Exception as error:
        log.error("unexpected failure: %s", error)
        log.debug("traceback", exc_info=True)
        payload = {"error": {"code": "INTERNAL_ERROR", "message": str(error)}}
        click.echo(json.dumps(payload, sort_keys=True), err=True)
        return EXIT_ERROR
    click.echo(format_summary(report.summary))
    if report.rows:
        click.echo()
        click.echo(format_table(report.rows))
    for path in paths:
        log.info("wrote %s", path)
    verdict = "PASS" if report.passed else "FAIL"
    click.echo(f"\n{cfg.command}: {verdict}")
    return EXIT_PASS if report.passed else EXIT_FAILED


def _finish(command, options):
    click.get_current_context().exit(execute(command, options))


@click.command("families")
@shared_options()
def families(**options):
    """Print the catalogue of the built-in families."""

    _finish("families", options)


@click.command("simulate")
@shared_options([
    click.option("--kind", type=click.Choice(["Glm", "GaussHetero", "GaussVst"]),
                 help="Experiment to simulate (default Glm)."),
])
def simulate(**options):
    """Draw f0 from Sigma and simulate one experiment on the grid."""

    _finish("simulate", options)


@click.command("distance-sweep")
@shared_options([
    click.option("--rate", type=click.Choice(["global", "almost-parametric"]),
                 help="Neighbourhood radius: gamma_n (default) or the local rate gamma_n*."),
])
def distance_sweep(**options):
    """Hellinger distance between the regression and Gaussian experiments along n."""

    _finish("distance-sweep", options)


@click.command("vst-clt")
@shared_options()
def vst_clt(**options):
    """Unit-variance limit of the variance-stabilized sample mean."""

    _finish("vst-clt", options)


@click.command("coupling")
@shared_options([
    click.option("--dict-size", type=int, help="Number of Hoelder-1/2 test functions (default 32)."),
])
def coupling(**options):
    """Tail and growth of S_n(f) under the dyadic coupling."""

    _finish("coupling", options)


@click.command("estimate")
@shared_options([
    click.option("--noise/--no-noise", default=None, help="Simulate noisy observations."),
])
def estimate(**options):
    """Sup-norm error study of the preliminary estimator."""

    _finish("estimate", options)


@click.command("transfer")
@shared_options()
def transfer(**options):
    """MISE of direct estimation against estimation in the Gamma scale."""

    _finish("transfer", options)


@click.command("vst-distance")
@shared_options([
    click.option("--pairs", type=int, help="Random (f0, f) pairs (default 20)."),
])
def vst_distance(**options):
    """White-noise distance between the heteroscedastic and variance-stable experiments."""

    _finish("vst-distance", options)


COMMANDS = [families, simulate, distance_sweep, vst_clt, coupling, estimate, transfer, vst_distance]


def register(group):
    for command in COMMANDS:
        group.add_command(command)
    return group

