#!/usr/bin/env python3
"""
coverage.py - リンクバジェットとカバレッジ

Range / area table for a set of transmit budgets under one log-distance
path-loss model.  A budgets file is JSON:

    {
      "path_loss": {"exponent": 4.0, "reference_loss_db": 40.0, ...},
      "budgets": [
        {"name": "ap_4w", "tx_power_dbm": 36.0},
        {"name": "client_40mw", "tx_power_dbm": 16.0, "crosses_wall": false}
      ]
    }

Every budget gets a "range" row; every ordered pair (i < j, file order)
gets a "ratio" row comparing budget i with budget j.
"""

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import pandas as pd

from hetcell.radio import LinkBudget, PathLossModel, max_range_m
from hetcell.scenario import NUMBER, ScenarioError, deep_merge, validate

log = logging.getLogger(__name__)

COVERAGE_COLUMNS = ["row", "budget", "reference", "tx_power_dbm", "crosses_wall",
                    "max_range_m", "area_m2", "range_ratio", "area_ratio"]

DEFAULT_BUDGETS = {
    "path_loss": {
        "exponent": 4.0,
        "reference_loss_db": 40.0,
        "reference_distance_m": 1.0,
        "wall_penetration_db": 0.0,
    },
    "budgets": [
        {"name": "integrated_ssid_4w", "tx_power_dbm": 36.0},
        {"name": "standard_ssid_40mw", "tx_power_dbm": 16.0},
    ],
}

BUDGET_DEFAULTS = {"sensitivity_dbm": -76.0, "noise_floor_dbm": -95.0, "crosses_wall": False}

BUDGETS_SCHEMA = {
    "path_loss": {
        "exponent": {"type": NUMBER, "exclusive_min": 0},
        "reference_loss_db": {"type": NUMBER, "min": 0},
        "reference_distance_m": {"type": NUMBER, "exclusive_min": 0},
        "wall_penetration_db": {"type": NUMBER, "min": 0},
    },
    "budgets": {"custom": "budgets"},
}

BUDGET_SCHEMA = {
    "name": {"type": str},
    "tx_power_dbm": {"type": NUMBER},
    "sensitivity_dbm": {"type": NUMBER},
    "noise_floor_dbm": {"type": NUMBER},
    "crosses_wall": {"type": bool},
}


@dataclass(frozen=True)
class NamedBudget:
    name: str
    budget: LinkBudget
    crosses_wall: bool = False


def _validate_budgets(value, path: str) -> list:
    if not isinstance(value, list):
        return [f"[TYPE] {path}: expected list (got {type(value).__name__})"]
    if not value:
        return [f"[RANGE] {path}: at least one budget required"]
    errors = []
    for i, item in enumerate(value):
        item_path = f"{path}[{i}]"
        if not isinstance(item, dict):
            errors.append(f"[TYPE] {item_path}: expected object (got {type(item).__name__})")
            continue
        merged = {**BUDGET_DEFAULTS, **item}
        errors.extend(validate(merged, BUDGET_SCHEMA, item_path))
        sens, noise = merged.get("sensitivity_dbm"), merged.get("noise_floor_dbm")
        if isinstance(sens, NUMBER) and isinstance(noise, NUMBER) and sens <= noise:
            errors.append(f"[LOGIC] {item_path}.sensitivity_dbm ({sens}) must exceed noise_floor_dbm ({noise})")
    return errors


def parse_budgets(data: dict) -> tuple[list, PathLossModel]:
    if not isinstance(data, dict):
        raise ScenarioError([f"[TYPE] <root>: expected object (got {type(data).__name__})"])
    merged = deep_merge(DEFAULT_BUDGETS, data)
    errors = []
    for key, rules in BUDGETS_SCHEMA.items():
        if "custom" in rules:
            errors.extend(_validate_budgets(merged[key], key))
        else:
            errors.extend(validate(merged[key], rules, key) if isinstance(merged[key], dict)
                          else [f"[TYPE] {key}: expected object"])
    errors.extend(f"[UNKNOWN] {key}: not a budgets key" for key in merged if key not in BUDGETS_SCHEMA)
    if errors:
        raise ScenarioError(errors)

    model = PathLossModel(**{k: float(v) for k, v in merged["path_loss"].items()})
    budgets = []
    for item in merged["budgets"]:
        item = {**BUDGET_DEFAULTS, **item}
        budgets.append(NamedBudget(item["name"],
                                   LinkBudget(float(item["tx_power_dbm"]), float(item["sensitivity_dbm"]),
                                              float(item["noise_floor_dbm"])),
                                   item["crosses_wall"]))
    return budgets, model


def load_budgets(path) -> tuple[list, PathLossModel]:
    with open(Path(path), 'r', encoding='utf-8') as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ScenarioError([f"[FORMAT] <root>: invalid JSON: {e}"]) from e
    return parse_budgets(data)


def coverage_report(budgets: list, model: PathLossModel) -> pd.DataFrame:
    """Per-budget max range and area, then pairwise range / area ratios."""
    rows = []
    ranges = []
    for nb in budgets:
        r = max_range_m(nb.budget, model, nb.crosses_wall)
        ranges.append(r)
        rows.append({"row": "range", "budget": nb.name, "reference": "", "tx_power_dbm": nb.budget.tx_power_dbm,
                     "crosses_wall": nb.crosses_wall, "max_range_m": r, "area_m2": math.pi * r * r,
                     "range_ratio": math.nan, "area_ratio": math.nan})

    for i, a in enumerate(budgets):
        for j in range(i + 1, len(budgets)):
            b = budgets[j]
            rr = ranges[i] / ranges[j] if ranges[j] > 0 else math.inf
            rows.append({"row": "ratio", "budget": a.name, "reference": b.name, "tx_power_dbm": math.nan,
                         "crosses_wall": a.crosses_wall, "max_range_m": math.nan, "area_m2": math.nan,
                         "range_ratio": rr, "area_ratio": rr * rr})
    log.debug("coverage report: %d budgets, exponent %.2f", len(budgets), model.exponent)
    return pd.DataFrame(rows, columns=COVERAGE_COLUMNS)
