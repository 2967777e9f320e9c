# Native and installed modules
import math

import numpy as np
import pytest

# Custom modules
from utils import utils
from utils.errors import ConfigError


@pytest.mark.parametrize("field, expected", [("4096", 4096), ("2**12", 4096), (256, 256), (512.0, 512)])
def test_parse_count(field, expected):
    assert utils.parse_count(field) == expected


@pytest.mark.parametrize("field", ["0", "-3", "1.5", "many", "2**"])
def test_parse_count_rejects(field):
    with pytest.raises(ConfigError):
        utils.parse_count(field)


def test_parse_n_list():
    assert utils.parse_n_list("256..8192") == [256, 512, 1024, 2048, 4096, 8192]
    assert utils.parse_n_list("300..1100") == [512, 1024]
    assert utils.parse_n_list("1024, 256,256") == [256, 1024]
    assert utils.parse_n_list(2048) == [2048]
    with pytest.raises(ConfigError):
        utils.parse_n_list("1100..1200")
    with pytest.raises(ConfigError):
        utils.parse_n_list("512..256")


def test_substreams_are_reproducible_and_distinct():
    first = [rng.random() for rng in utils.substreams(5, 3)]
    second = [rng.random() for rng in utils.substreams(5, 3)]
    assert first == second
    assert len(set(first)) == 3


def test_map_blocks_keeps_order():
    assert utils.map_blocks(lambda x: x * x, range(10), workers=4) == [x * x for x in range(10)]


def test_config_hash_is_canonical():
    assert utils.config_hash({"a": 1, "b": [2, 3]}) == utils.config_hash({"b": [2, 3], "a": 1})


def test_loglinear_fit():
    x = np.array([256, 512, 1024, 2048])
    slope, intercept, r2, _ = utils.loglinear_fit(x, 3.0 * x ** -0.5)
    assert slope == pytest.approx(-0.5)
    assert math.exp(intercept) == pytest.approx(3.0)
    assert r2 == pytest.approx(1.0)
    assert all(math.isnan(v) for v in utils.loglinear_fit([1, 2], [0.0, 1.0]))
