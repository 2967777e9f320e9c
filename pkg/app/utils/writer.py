"""Result files: CSV through pandas, JSON summaries with sorted keys."""

# Native and installed modules
import json
import math
import os

import numpy as np
import pandas as pd
from tabulate import tabulate

# Custom modules
import config
from model.grid_function import GridFunction
from model.report import ReportModel
from model.run_config import OUTPUT_KEYS, RunConfigModel
from utils.errors import ConfigError


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not serializable: {type(value).__name__}")


def dumps(payload):
    return json.dumps(payload, sort_keys=True, indent=2, default=_jsonable) + "\n"


def _ensure_dir(path):
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)


def write_grid_function(path, f):
    """CSV (t, value) preceded by a '# {json header}' line."""

    _ensure_dir(path)
    frame = pd.DataFrame({"t": f.t, "value": f.values})
    with open(path, "w", newline="") as handle:
        handle.write("# " + json.dumps(f.header(), sort_keys=True) + "\n")
        frame.to_csv(handle, index=False, float_format=config.FLOAT_FORMAT)


def read_grid_function(path):
    with open(path, "r") as handle:
        first = handle.readline()
        if not first.startswith("# "):
            raise ConfigError(f"{path}: missing grid function header")
        header = json.loads(first[2:])
        frame = pd.read_csv(handle)
    if len(frame) != header["n"]:
        raise ConfigError(f"{path}: header announces n={header['n']}, found {len(frame)}")
    theta0 = tuple(header["theta0"]) if header.get("theta0") else None
    return GridFunction(
        frame["value"].to_numpy(),
        beta=header["beta"],
        holder_const=header["L"],
        theta0=theta0,
    )


def write_sample(path, sample):
    """CSV (t, x) of the observations plus a JSON sidecar path + '.json'."""

    _ensure_dir(path)
    frame = pd.DataFrame({"t": sample.f.t, "x": sample.data})
    frame.to_csv(path, index=False, float_format=config.FLOAT_FORMAT)
    with open(path + ".json", "w") as handle:
        handle.write(dumps(sample.sidecar()))
    return path, path + ".json"


def stamp(rows, cfg):
    """Attach config_hash and seed to every row."""

    digest = cfg.hash
    return [dict(row, config_hash=digest, seed=cfg.seed) for row in rows]


def write_rows(path, rows, cfg):
    _ensure_dir(path)
    frame = pd.DataFrame(stamp(rows, cfg))
    if path.endswith(".json"):
        with open(path, "w") as handle:
            handle.write(dumps(frame.to_dict(orient="records")))
    else:
        frame.to_csv(path, index=False, float_format=config.FLOAT_FORMAT)
    return path


def summary_payload(report, cfg):
    payload = ReportModel(exclude=("rows",)).dump(report)
    payload.update(
        config=RunConfigModel(exclude=OUTPUT_KEYS).dump(cfg),
        config_hash=cfg.hash,
        seed=cfg.seed,
        schema_version=config.SCHEMA_VERSION,
    )
    return payload


def write_summary(path, report, cfg):
    _ensure_dir(path)
    with open(path, "w") as handle:
        handle.write(dumps(summary_payload(report, cfg)))
    return path


def format_table(rows, limit=20):
    """Plain-text table of the first rows, for the terminal."""

    if not rows:
        return ""
    shown = [
        {key: value for key, value in row.items() if not isinstance(value, (list, dict))}
        for row in rows[:limit]
    ]
    table = tabulate(shown, headers="keys", floatfmt=".6g")
    if len(rows) > limit:
        table += f"\n... {len(rows) - limit} more rows"
    return table


def format_summary(summary):
    flat = []
    for key, value in summary.items():
        if isinstance(value, float) and math.isnan(value):
            value = "nan"
        flat.append((key, value if not isinstance(value, (dict, list)) else json.dumps(value)))
    return tabulate(flat, headers=("key", "value"))
