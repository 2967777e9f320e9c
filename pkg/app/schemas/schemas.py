"""Schemas used to validate the run configuration."""

# Native and installed modules
import json
import os

# Custom modules
import config

with open(os.path.join(config.SCHEMA_DIR, "run_config.json"), "r") as schema_file:
    run_config_schema = json.load(schema_file)

