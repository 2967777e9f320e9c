"""Helpers shared by the numerical modules and the orchestrator."""

# Native and installed modules
import hashlib
import json
import math
import re
from multiprocessing.pool import ThreadPool

import numpy as np
from scipy import stats

# Custom modules
from utils.errors import ConfigError


def parse_count(field, name="value"):
    """
    Cast a field value to a positive integer.

    Accepts ints, integral floats and strings such as "4096" or "2**12".

    Keyword arguments:
    field -- the value to parse
    name -- the key reported in the error message

    return
    The integer obtained from the cast
    """

    text = str(field).strip()
    match = re.fullmatch(r"(\d+)\s*\*\*\s*(\d+)", text)
    try:
        value = int(match.group(1)) ** int(match.group(2)) if match else int(float(text))
    except ValueError:
        raise ConfigError(f"{name}={field!r}: expected a positive integer")
    if value <= 0 or (not match and float(text) != value):
        raise ConfigError(f"{name}={field!r}: expected a positive integer")
    return value


def is_power_of_two(n):
    return n > 0 and n & (n - 1) == 0


def parse_n_list(field):
    """
    Parse the --n flag into a sorted list of sample sizes.

    "a..b" expands to the powers of two between a and b, "a,b,c" is a plain
    list and a single value gives a one-element list.
    """

    if isinstance(field, (list, tuple)):
        values = [parse_count(v, "n") for v in field]
    else:
        text = str(field).strip()
        if ".." in text:
            low, high = (parse_count(part, "n") for part in text.split("..", 1))
            if low > high:
                raise ConfigError(f"n={text!r}: empty range")
            start = 1 << max(int(math.ceil(math.log2(low))), 0)
            values = []
            while start <= high:
                values.append(start)
                start <<= 1
            if not values:
                raise ConfigError(f"n={text!r}: no power of two in the range")
        else:
            values = [parse_count(v, "n") for v in text.split(",") if v.strip()]
    if not values:
        raise ConfigError("n: at least one sample size is needed")
    return sorted(set(values))


def substreams(seed, count):
    """Independent generators from the children of SeedSequence(seed)."""

    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(child) for child in children]


def map_blocks(func, items, workers=None):
    """
    Apply func to every item, on a thread pool when workers > 1.

    The ordered map keeps the result order independent of scheduling.
    """

    items = list(items)
    if not workers or workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPool(processes=min(workers, len(items))) as pool:
        return pool.map(func, items)


def config_hash(payload):
    """SHA-256 of the canonical JSON form of a configuration mapping."""

    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()


def loglinear_fit(x, y, log_x=True):
    """
    Least-squares line of log y against (log) x.

    return
    (slope, intercept, r2, slope_stderr)
    """

    x, y = np.asarray(x, float), np.asarray(y, float)
    keep = y > 0
    if keep.sum() < 2:
        return math.nan, math.nan, math.nan, math.nan
    xs = np.log(x[keep]) if log_x else x[keep]
    if np.ptp(xs) == 0:
        return math.nan, math.nan, math.nan, math.nan
    fit = stats.linregress(xs, np.log(y[keep]))
    return float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2), float(fit.stderr)
