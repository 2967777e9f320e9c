import os
import yaml

BASE_DIR = os.path.abspath(os.path.dirname(__file__))
CONFIG_FILE_PATH = os.path.join(BASE_DIR, "config.yml")
SCHEMA_DIR = os.path.join(BASE_DIR, "schemas")

with open(CONFIG_FILE_PATH, "r") as config_file:
    settings = yaml.safe_load(config_file)

# Logging config
logging_settings = settings["logging"]
LOG_LEVEL = os.environ.get("WORKBENCH_LOG_LEVEL", logging_settings["level"])
LOG_FORMAT = logging_settings["format"]

# Family defaults, keyed by the CLI name of the family
FAMILIES = settings["families"]

# Numerical constants
GRID_FRACTION = settings["regularity"]["grid_fraction"]
BISECTION_TOL = settings["regularity"]["bisection_tol"]
KAPPA0 = settings["rates"]["kappa0"]
KAPPA0_STAR_FACTOR = settings["rates"]["kappa0_star_factor"]
SWEEP_RATE = settings["rates"]["sweep_rate"]
HOLDER = settings["holder"]
MONTECARLO = settings["montecarlo"]
COUPLING = settings["coupling"]
ESTIMATOR = settings["estimator"]

# Output config
workbench = settings["workbench"]
SCHEMA_VERSION = workbench["schema_version"]
FLOAT_FORMAT = workbench["float_format"]
ACCEPTANCE = workbench["acceptance"]


class Config(object):
    OUT_DIR = os.environ.get("WORKBENCH_OUT_DIR", workbench["out_dir"])
    FORMAT = workbench["format"]
    REPS = MONTECARLO["reps"]
    BLOCKS = MONTECARLO["blocks"]
    WORKERS = MONTECARLO["workers"]
    SEED = 0
    BETA = 0.75
    HOLDER_CONST = 1.0
    N_LIST = [256, 512, 1024, 2048, 4096, 8192]


class DevelopmentConfig(Config):
    """Desk-scale defaults used by the CLI."""


class TestConfig(Config):
    """Small replication counts so that smoke runs stay fast."""

    REPS = 400
    BLOCKS = 20
    N_LIST = [256, 512]


class ProductionConfig(Config):
    """Full acceptance runs."""

    WORKERS = os.cpu_count() or 1


config = {
    "development": DevelopmentConfig,
    "testing": TestConfig,
    "production": ProductionConfig,
}


def current():
    """Return the config class selected by the WORKBENCH_ENV variable."""

    return config.get(os.environ.get("WORKBENCH_ENV", "development"), Config)
