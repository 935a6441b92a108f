"""Shared fixtures for the hetcell test suite."""

import copy
import json

import pytest

from hetcell.kernel import Kernel

# Short uplink-only run with every client at one point: no capture, no management frames.
ORACLE_LIKE = {
    "clients": 1,
    "mode": "standard",
    "duration_s": 1.0,
    "seed": 3,
    "placement": "colocated",
    "mac": {"retry_limit": None},
    "flow": {"direction": "uplink", "transport": "none"},
    "mgmt": {"interval_us": 0},
}

SMALL_CELL = {
    "clients": 4,
    "mode": "standard",
    "duration_s": 0.5,
    "seed": 11,
}


@pytest.fixture
def kernel():
    return Kernel(seed=1)


@pytest.fixture
def oracle_like():
    return copy.deepcopy(ORACLE_LIKE)


@pytest.fixture
def small_cell():
    return copy.deepcopy(SMALL_CELL)


@pytest.fixture
def scenario_file(tmp_path):
    """Write a scenario dict to a temporary JSON file and return its path."""
    def write(data, name="scenario.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path
    return write
