#!/usr/bin/env python3
"""
sweep.py - パラメータスイープ

One run per axis value.  Point i runs with seed = base seed + i, so adding
values at the end never perturbs earlier rows.  Each point is re-validated
through the scenario parser, so a bad value is reported as that point's
ScenarioError.
"""

import copy
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Iterable, Union

from hetcell.enums import Duplex
from hetcell.metrics import ReportTable
from hetcell.scenario import ScenarioConfig, ScenarioError, scenario_from_dict
from hetcell.simulation import run

log = logging.getLogger(__name__)

AXES = ("n_clients", "cw_min", "retry_limit", "mode", "ul_fraction")

UNLIMITED = ("none", "null", "inf", "unlimited")


class SweepError(ValueError):
    pass


def parse_axis_values(axis: str, text: str) -> list:
    """
    "1,2,5,10" -> [1, 2, 5, 10]; integer axes also take "a..b" ranges.
    retry_limit accepts none / inf / unlimited for no limit.
    """
    if axis not in AXES:
        raise SweepError(f"unknown sweep axis '{axis}' (expected one of {', '.join(AXES)})")
    values = []
    for token in (t.strip() for t in text.split(',')):
        if not token:
            continue
        try:
            if axis == "mode":
                values.append(token)
            elif axis == "ul_fraction":
                values.append(float(token))
            elif axis == "retry_limit" and token.lower() in UNLIMITED:
                values.append(None)
            elif ".." in token:
                lo, hi = token.split("..", 1)
                values.extend(range(int(lo), int(hi) + 1))
            else:
                values.append(int(token))
        except ValueError as e:
            raise SweepError(f"bad value '{token}' for axis {axis}") from e
    return values


def apply_axis(data: dict, axis: str, value: Any) -> dict:
    """Copy of a scenario dict with one axis set."""
    out = copy.deepcopy(data)
    if axis == "n_clients":
        if isinstance(out.get("clients"), list):
            raise SweepError("n_clients axis needs a scenario with an integer 'clients' count")
        out["clients"] = value
    elif axis == "cw_min":
        out.setdefault("mac", {})["cw_min"] = value
    elif axis == "retry_limit":
        out.setdefault("mac", {})["retry_limit"] = value
    elif axis == "mode":
        out["mode"] = value
        if isinstance(out.get("clients"), list):
            # explicit clients follow the swept mode
            out["clients"] = [{k: v for k, v in c.items() if k not in ("mode", "capability")}
                              if isinstance(c, dict) else c for c in out["clients"]]
    elif axis == "ul_fraction":
        out.setdefault("lte", {})["ul_fraction"] = value
    else:
        raise SweepError(f"unknown sweep axis '{axis}' (expected one of {', '.join(AXES)})")
    return out


def sweep_configs(base: Union[dict, ScenarioConfig], axis: str, values: Iterable) -> list:
    """Validated (value, config) pairs; every failing point is reported together."""
    if axis not in AXES:
        raise SweepError(f"unknown sweep axis '{axis}' (expected one of {', '.join(AXES)})")
    data = base.to_dict() if isinstance(base, ScenarioConfig) else dict(base)
    base_config = base if isinstance(base, ScenarioConfig) else scenario_from_dict(data)
    if axis == "ul_fraction" and base_config.lte.duplex is not Duplex.TDD:
        raise SweepError("ul_fraction axis only applies to lte.duplex = TDD")
    base_seed = base_config.seed

    points = []
    errors = []
    for index, value in enumerate(values):
        point = apply_axis(data, axis, value)
        point["seed"] = base_seed + index
        try:
            points.append((value, scenario_from_dict(point)))
        except ScenarioError as e:
            errors.extend(f"{axis}={value}: {msg}" for msg in e.errors)
    if errors:
        raise ScenarioError(errors)
    return points


def sweep(base: Union[dict, ScenarioConfig], axis: str, values: Iterable, jobs: int = 1) -> ReportTable:
    """Run every point; rows keep the order of values regardless of completion order."""
    values = list(values)
    points = sweep_configs(base, axis, values)
    table = ReportTable(axis)
    if not points:
        return table
    configs = [cfg for _, cfg in points]
    log.info("sweeping %s over %d values (%d jobs)", axis, len(points), jobs)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(run, configs))
    else:
        reports = [run(cfg) for cfg in configs]
    table.rows = [(value, report) for (value, _), report in zip(points, reports)]
    return table
