#!/usr/bin/env python3
"""
scenario.py - シナリオ設定の読み込みとバリデーション

Scenario files are JSON.  The user's dict is deep-merged over
DEFAULT_SCENARIO, checked against the declarative SCHEMA and the
cross-field logic rules, and only then turned into a frozen
ScenarioConfig.  Every problem is collected before raising, each as
"[CATEGORY] dotted.path: message".

Usage:
    cfg = load_scenario("scenarios/reference.json")
    cfg = parse_scenario('{"clients": 10, "mode": "standard", "duration_s": 10, "seed": 1}')
    get(cfg.to_dict(), "mac.cw_min")  -> 15
"""

import copy
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from hetcell.enums import (Capability, Direction, Duplex, Mode, Placement, SourceKind,
                           TransportKind, TunnelPath)
from hetcell.lte import LteConfig, TunnelConfig
from hetcell.mac import MacParams, is_cw_value
from hetcell.radio import OFDM_BITS_PER_SYMBOL, LinkBudget, PathLossModel, PhyParams, Position
from hetcell.traffic import AckPolicy, FlowSpec, SchedulerWeights

log = logging.getLogger(__name__)

MAX_RESERVATION_US = 32000

# ============================================================================
# Defaults
# ============================================================================

# Reference scenario: 802.11a at 54 Mbps, saturated bidirectional traffic.
DEFAULT_SCENARIO = {
    "clients": 10,
    "mode": "standard",
    "duration_s": 10.0,
    "seed": 1,
    "placement": "ring",
    "client_radius_m": 10.0,
    "client_tx_power_dbm": 16.0,
    "ap": {
        "x": 0.0,
        "y": 0.0,
        "tx_power_dbm": 36.0,
        "standard_ssid_dbm": 16.0,
        "integrated_ssid_dbm": 36.0,
        "indoor": True,
    },
    "mac": {
        "slot_us": 9,
        "sifs_us": 16,
        "difs_us": 34,
        "cw_min": 15,
        "cw_max": 1023,
        "retry_limit": 7,
        "ack_timeout_us": None,
    },
    "phy": {
        "data_rate_mbps": 54,
        "control_rate_mbps": 24,
        "preamble_us": 20,
        "symbol_us": 4,
    },
    "path_loss": {
        "exponent": 4.0,
        "reference_loss_db": 40.0,
        "reference_distance_m": 1.0,
        "wall_penetration_db": 0.0,
    },
    "link_budget": {
        "sensitivity_dbm": -76.0,
        "noise_floor_dbm": -95.0,
        "capture_threshold_db": 10.0,
        "carrier_sense_dbm": -82.0,
    },
    "lte": {
        "duplex": "FDD",
        "dl_capacity_mbps": 100.0,
        "ul_capacity_mbps": 50.0,
        "total_capacity_mbps": 100.0,
        "ul_fraction": 0.5,
        "scheduler_epoch_us": 1000,
    },
    "tunnel": {
        "path": "via_core",
        "one_way_latency_us": None,
        "per_packet_overhead_bytes": 40,
    },
    "flow": {
        "direction": "bidirectional",
        "source": "saturated",
        "rate_mbps": None,
        "segment_bytes": 1500,
        "transport": "reliable",
    },
    "ack_policy": {
        "segments_per_ack": 2,
        "ack_bytes": 40,
    },
    "loose": {
        "wifi_uplink_cost": 1.0,
        "wifi_downlink_cost": 0.0,
        "lte_uplink_cost": 0.0,
        "lte_downlink_cost": 0.0,
        "alpha": 0.0,
        "beta": 0.0,
        "rtt_ref_us": 10000.0,
        "bw_ref_mbps": 54.0,
    },
    "tight": {
        "epoch_us": 10000,
        "min_backlog_segments": 2,
    },
    "hybrid": {
        "ack_timeout_us": None,
        "ap_cw_min": 0,
    },
    "mgmt": {
        "interval_us": 500000,
        "bytes": 100,
        "assoc_retry_us": 100000,
    },
    "downlink_only": {
        "enabled": False,
        "period_us": 100000,
        "window_us": 32000,
    },
    "interferers": [],
    "traffic_stop_s": None,
    "trace": False,
}

CLIENT_DEFAULTS = {"mode": None, "capability": None, "indoor": True, "tx_power_dbm": None}

INTERFERER_DEFAULTS = {"tx_power_dbm": 20.0, "start_s": 0.0, "stop_s": None, "burst_us": 1000}

NUMBER = (int, float)
MODES = [m.value for m in Mode]

# 必須キーとその型・制約の定義
SCHEMA = {
    "clients": {"custom": "clients"},
    "mode": {"type": str, "choices": MODES},
    "duration_s": {"type": NUMBER, "exclusive_min": 0},
    "seed": {"type": int, "min": 0},
    "placement": {"type": str, "choices": [p.value for p in Placement]},
    "client_radius_m": {"type": NUMBER, "min": 0},
    "client_tx_power_dbm": {"type": NUMBER},
    "ap": {
        "x": {"type": NUMBER},
        "y": {"type": NUMBER},
        "tx_power_dbm": {"type": NUMBER},
        "standard_ssid_dbm": {"type": NUMBER},
        "integrated_ssid_dbm": {"type": NUMBER},
        "indoor": {"type": bool},
    },
    "mac": {
        "slot_us": {"type": int, "min": 1},
        "sifs_us": {"type": int, "min": 1},
        "difs_us": {"type": int, "min": 1},
        "cw_min": {"type": int, "min": 0, "cw": True},
        "cw_max": {"type": int, "min": 0, "cw": True},
        "retry_limit": {"type": int, "min": 0, "nullable": True},
        "ack_timeout_us": {"type": int, "min": 1, "nullable": True},
    },
    "phy": {
        "data_rate_mbps": {"type": int, "choices": sorted(OFDM_BITS_PER_SYMBOL)},
        "control_rate_mbps": {"type": int, "choices": sorted(OFDM_BITS_PER_SYMBOL)},
        "preamble_us": {"type": int, "min": 1},
        "symbol_us": {"type": int, "min": 1},
    },
    "path_loss": {
        "exponent": {"type": NUMBER, "exclusive_min": 0},
        "reference_loss_db": {"type": NUMBER, "min": 0},
        "reference_distance_m": {"type": NUMBER, "exclusive_min": 0},
        "wall_penetration_db": {"type": NUMBER, "min": 0},
    },
    "link_budget": {
        "sensitivity_dbm": {"type": NUMBER},
        "noise_floor_dbm": {"type": NUMBER},
        "capture_threshold_db": {"type": NUMBER},
        "carrier_sense_dbm": {"type": NUMBER},
    },
    "lte": {
        "duplex": {"type": str, "choices": [d.value for d in Duplex]},
        "dl_capacity_mbps": {"type": NUMBER, "min": 0},
        "ul_capacity_mbps": {"type": NUMBER, "min": 0},
        "total_capacity_mbps": {"type": NUMBER, "min": 0},
        "ul_fraction": {"type": NUMBER, "min": 0, "max": 1},
        "scheduler_epoch_us": {"type": int, "min": 1},
    },
    "tunnel": {
        "path": {"type": str, "choices": [p.value for p in TunnelPath]},
        "one_way_latency_us": {"type": int, "min": 0, "nullable": True},
        "per_packet_overhead_bytes": {"type": int, "min": 0},
    },
    "flow": {
        "direction": {"type": str, "choices": [d.value for d in Direction]},
        "source": {"type": str, "choices": [s.value for s in SourceKind]},
        "rate_mbps": {"type": NUMBER, "exclusive_min": 0, "nullable": True},
        "segment_bytes": {"type": int, "min": 1},
        "transport": {"type": str, "choices": [t.value for t in TransportKind]},
    },
    "ack_policy": {
        "segments_per_ack": {"type": int, "min": 1},
        "ack_bytes": {"type": int, "min": 1},
    },
    "loose": {
        "wifi_uplink_cost": {"type": NUMBER, "min": 0},
        "wifi_downlink_cost": {"type": NUMBER, "min": 0},
        "lte_uplink_cost": {"type": NUMBER, "min": 0},
        "lte_downlink_cost": {"type": NUMBER, "min": 0},
        "alpha": {"type": NUMBER, "min": 0},
        "beta": {"type": NUMBER, "min": 0},
        "rtt_ref_us": {"type": NUMBER, "exclusive_min": 0},
        "bw_ref_mbps": {"type": NUMBER, "exclusive_min": 0},
    },
    "tight": {
        "epoch_us": {"type": int, "min": 1},
        "min_backlog_segments": {"type": int, "min": 1},
    },
    "hybrid": {
        "ack_timeout_us": {"type": int, "min": 1, "nullable": True},
        "ap_cw_min": {"type": int, "min": 0, "cw": True},
    },
    "mgmt": {
        "interval_us": {"type": int, "min": 0},
        "bytes": {"type": int, "min": 1},
        "assoc_retry_us": {"type": int, "min": 1},
    },
    "downlink_only": {
        "enabled": {"type": bool},
        "period_us": {"type": int, "min": 1},
        "window_us": {"type": int, "min": 1},
    },
    "interferers": {"custom": "interferers"},
    "traffic_stop_s": {"type": NUMBER, "min": 0, "nullable": True},
    "trace": {"type": bool},
}

CLIENT_SCHEMA = {
    "x": {"type": NUMBER},
    "y": {"type": NUMBER},
    "mode": {"type": str, "choices": MODES, "nullable": True},
    "capability": {"type": str, "choices": [c.value for c in Capability], "nullable": True},
    "indoor": {"type": bool},
    "tx_power_dbm": {"type": NUMBER, "nullable": True},
}

INTERFERER_SCHEMA = {
    "x": {"type": NUMBER},
    "y": {"type": NUMBER},
    "tx_power_dbm": {"type": NUMBER},
    "start_s": {"type": NUMBER, "min": 0},
    "stop_s": {"type": NUMBER, "min": 0, "nullable": True},
    "burst_us": {"type": int, "min": 1},
}


class ScenarioError(ValueError):
    """Scenario validation failure carrying every problem found."""

    def __init__(self, errors: list):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


# ============================================================================
# Config dataclasses
# ============================================================================

@dataclass(frozen=True)
class ApConfig:
    x: float = 0.0
    y: float = 0.0
    tx_power_dbm: float = 36.0
    standard_ssid_dbm: float = 16.0
    integrated_ssid_dbm: float = 36.0
    indoor: bool = True

    @property
    def position(self) -> Position:
        return Position(self.x, self.y)


@dataclass(frozen=True)
class ClientSpec:
    x: float
    y: float
    mode: Mode
    capability: Capability
    indoor: bool = True
    tx_power_dbm: float = 16.0

    @property
    def position(self) -> Position:
        return Position(self.x, self.y)


@dataclass(frozen=True)
class ReceiverConfig:
    sensitivity_dbm: float = -76.0
    noise_floor_dbm: float = -95.0
    capture_threshold_db: float = 10.0
    carrier_sense_dbm: float = -82.0

    def budget(self, tx_power_dbm: float) -> LinkBudget:
        return LinkBudget(tx_power_dbm, self.sensitivity_dbm, self.noise_floor_dbm, self.capture_threshold_db)


@dataclass(frozen=True)
class LooseConfig:
    wifi_uplink_cost: float = 1.0
    wifi_downlink_cost: float = 0.0
    lte_uplink_cost: float = 0.0
    lte_downlink_cost: float = 0.0
    weights: SchedulerWeights = field(default_factory=SchedulerWeights)


@dataclass(frozen=True)
class TightConfig:
    epoch_us: int = 10000
    min_backlog_segments: int = 2


@dataclass(frozen=True)
class HybridConfig:
    ack_timeout_us: Optional[int] = None   # None = 2 * tunnel latency + 4000
    ap_cw_min: int = 0


@dataclass(frozen=True)
class MgmtConfig:
    interval_us: int = 500000   # 0 disables periodic probes
    bytes: int = 100
    assoc_retry_us: int = 100000


@dataclass(frozen=True)
class DownlinkOnlyConfig:
    enabled: bool = False
    period_us: int = 100000
    window_us: int = 32000


@dataclass(frozen=True)
class InterfererConfig:
    x: float
    y: float
    tx_power_dbm: float = 20.0
    start_s: float = 0.0
    stop_s: Optional[float] = None
    burst_us: int = 1000

    @property
    def position(self) -> Position:
        return Position(self.x, self.y)


@dataclass(frozen=True)
class ScenarioConfig:
    clients: tuple
    mode: Mode
    duration_s: float
    seed: int
    placement: Placement
    client_radius_m: float
    client_tx_power_dbm: float
    ap: ApConfig
    mac: MacParams
    phy: PhyParams
    path_loss: PathLossModel
    link_budget: ReceiverConfig
    lte: LteConfig
    tunnel: TunnelConfig
    flow: FlowSpec
    ack_policy: AckPolicy
    loose: LooseConfig
    tight: TightConfig
    hybrid: HybridConfig
    mgmt: MgmtConfig
    downlink_only: DownlinkOnlyConfig
    interferers: tuple
    traffic_stop_s: Optional[float]
    trace: bool

    @property
    def n_clients(self) -> int:
        return len(self.clients)

    @property
    def duration_us(self) -> int:
        return int(round(self.duration_s * 1e6))

    @property
    def traffic_stop_us(self) -> Optional[int]:
        return None if self.traffic_stop_s is None else int(round(self.traffic_stop_s * 1e6))

    @property
    def hybrid_ack_timeout_us(self) -> int:
        if self.hybrid.ack_timeout_us is not None:
            return self.hybrid.ack_timeout_us
        return 2 * self.tunnel.latency_us + 4000

    def to_dict(self) -> dict:
        """Fully-defaulted, normalized scenario dict (parses back to an equal config)."""
        return {
            "clients": [
                {"x": c.x, "y": c.y, "mode": c.mode.value, "capability": c.capability.value,
                 "indoor": c.indoor, "tx_power_dbm": c.tx_power_dbm}
                for c in self.clients
            ],
            "mode": self.mode.value,
            "duration_s": self.duration_s,
            "seed": self.seed,
            "placement": self.placement.value,
            "client_radius_m": self.client_radius_m,
            "client_tx_power_dbm": self.client_tx_power_dbm,
            "ap": {
                "x": self.ap.x, "y": self.ap.y, "tx_power_dbm": self.ap.tx_power_dbm,
                "standard_ssid_dbm": self.ap.standard_ssid_dbm,
                "integrated_ssid_dbm": self.ap.integrated_ssid_dbm,
                "indoor": self.ap.indoor,
            },
            "mac": {
                "slot_us": self.mac.slot_us, "sifs_us": self.mac.sifs_us, "difs_us": self.mac.difs_us,
                "cw_min": self.mac.cw_min, "cw_max": self.mac.cw_max,
                "retry_limit": self.mac.retry_limit, "ack_timeout_us": self.mac.ack_timeout_us,
            },
            "phy": {
                "data_rate_mbps": self.phy.data_rate_mbps, "control_rate_mbps": self.phy.control_rate_mbps,
                "preamble_us": self.phy.preamble_us, "symbol_us": self.phy.symbol_us,
            },
            "path_loss": {
                "exponent": self.path_loss.exponent,
                "reference_loss_db": self.path_loss.reference_loss_db,
                "reference_distance_m": self.path_loss.reference_distance_m,
                "wall_penetration_db": self.path_loss.wall_penetration_db,
            },
            "link_budget": {
                "sensitivity_dbm": self.link_budget.sensitivity_dbm,
                "noise_floor_dbm": self.link_budget.noise_floor_dbm,
                "capture_threshold_db": self.link_budget.capture_threshold_db,
                "carrier_sense_dbm": self.link_budget.carrier_sense_dbm,
            },
            "lte": {
                "duplex": self.lte.duplex.value,
                "dl_capacity_mbps": self.lte.dl_capacity_mbps,
                "ul_capacity_mbps": self.lte.ul_capacity_mbps,
                "total_capacity_mbps": self.lte.total_capacity_mbps,
                "ul_fraction": self.lte.ul_fraction,
                "scheduler_epoch_us": self.lte.scheduler_epoch_us,
            },
            "tunnel": {
                "path": self.tunnel.path.value,
                "one_way_latency_us": self.tunnel.one_way_latency_us,
                "per_packet_overhead_bytes": self.tunnel.per_packet_overhead_bytes,
            },
            "flow": {
                "direction": self.flow.direction.value,
                "source": self.flow.source.value,
                "rate_mbps": self.flow.rate_mbps,
                "segment_bytes": self.flow.segment_bytes,
                "transport": self.flow.transport.value,
            },
            "ack_policy": {
                "segments_per_ack": self.ack_policy.segments_per_ack,
                "ack_bytes": self.ack_policy.ack_bytes,
            },
            "loose": {
                "wifi_uplink_cost": self.loose.wifi_uplink_cost,
                "wifi_downlink_cost": self.loose.wifi_downlink_cost,
                "lte_uplink_cost": self.loose.lte_uplink_cost,
                "lte_downlink_cost": self.loose.lte_downlink_cost,
                "alpha": self.loose.weights.alpha,
                "beta": self.loose.weights.beta,
                "rtt_ref_us": self.loose.weights.rtt_ref_us,
                "bw_ref_mbps": self.loose.weights.bw_ref_mbps,
            },
            "tight": {"epoch_us": self.tight.epoch_us, "min_backlog_segments": self.tight.min_backlog_segments},
            "hybrid": {"ack_timeout_us": self.hybrid.ack_timeout_us, "ap_cw_min": self.hybrid.ap_cw_min},
            "mgmt": {"interval_us": self.mgmt.interval_us, "bytes": self.mgmt.bytes,
                     "assoc_retry_us": self.mgmt.assoc_retry_us},
            "downlink_only": {"enabled": self.downlink_only.enabled, "period_us": self.downlink_only.period_us,
                              "window_us": self.downlink_only.window_us},
            "interferers": [
                {"x": i.x, "y": i.y, "tx_power_dbm": i.tx_power_dbm, "start_s": i.start_s,
                 "stop_s": i.stop_s, "burst_us": i.burst_us}
                for i in self.interferers
            ],
            "traffic_stop_s": self.traffic_stop_s,
            "trace": self.trace,
        }


# ============================================================================
# Validation
# ============================================================================

def deep_merge(base: dict, override: dict) -> dict:
    """Recursively merge override into a copy of base."""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def get(config: dict, key: str, default: Any = None) -> Any:
    """
    Get a value by dot-notation key.

    Example:
        get(cfg, "mac.cw_min") -> 15
    """
    value = config
    for k in key.split('.'):
        if isinstance(value, dict) and k in value:
            value = value[k]
        else:
            return default
    return value


def _type_ok(value, expected) -> bool:
    # bool is an int subclass; JSON true/false must not pass as numbers
    if isinstance(value, bool) and expected is not bool:
        return False
    return isinstance(value, expected)


def _type_name(expected) -> str:
    if expected is NUMBER:
        return "number"
    return {int: "integer", str: "string", bool: "boolean"}.get(expected, str(expected))


def _check_field(value, rules: dict, full_path: str) -> list:
    errors = []
    if value is None:
        if not rules.get("nullable"):
            errors.append(f"[TYPE] {full_path}: must not be null")
        return errors
    expected = rules.get("type")
    if expected and not _type_ok(value, expected):
        errors.append(f"[TYPE] {full_path}: expected {_type_name(expected)} (got {type(value).__name__} = {value!r})")
        return errors
    if isinstance(value, float) and not math.isfinite(value):
        errors.append(f"[RANGE] {full_path}: must be finite (got {value})")
        return errors
    if "choices" in rules and value not in rules["choices"]:
        choices = ", ".join(str(c) for c in rules["choices"])
        errors.append(f"[CHOICE] {full_path}: must be one of {choices} (got {value!r})")
    if "min" in rules and value < rules["min"]:
        errors.append(f"[RANGE] {full_path}: must be >= {rules['min']} (got {value})")
    if "exclusive_min" in rules and value <= rules["exclusive_min"]:
        errors.append(f"[RANGE] {full_path}: must be > {rules['exclusive_min']} (got {value})")
    if "max" in rules and value > rules["max"]:
        errors.append(f"[RANGE] {full_path}: must be <= {rules['max']} (got {value})")
    if rules.get("cw") and isinstance(value, int) and value >= 0 and not is_cw_value(value):
        errors.append(f"[FORMAT] {full_path}: {full_path.rsplit('.', 1)[-1]} must be 2^k − 1 (got {value})")
    return errors


def validate(config: dict, schema: dict, path: str = "") -> list:
    """再帰的に config を検証"""
    errors = []
    for key, rules in schema.items():
        full_path = f"{path}.{key}" if path else key
        if key not in config:
            errors.append(f"[MISSING] {full_path}: required")
            continue
        value = config[key]
        if "custom" in rules:
            errors.extend(_CUSTOM[rules["custom"]](value, full_path))
            continue
        if isinstance(rules, dict) and "type" not in rules:
            # nested section
            if not isinstance(value, dict):
                errors.append(f"[TYPE] {full_path}: expected object (got {type(value).__name__})")
            else:
                errors.extend(validate(value, rules, full_path))
            continue
        errors.extend(_check_field(value, rules, full_path))

    for key in config:
        if key not in schema:
            full_path = f"{path}.{key}" if path else key
            errors.append(f"[UNKNOWN] {full_path}: not a scenario key")
    return errors


def _validate_list(value, path: str, item_schema: dict, defaults: dict) -> list:
    if not isinstance(value, list):
        return [f"[TYPE] {path}: expected list (got {type(value).__name__})"]
    errors = []
    for i, item in enumerate(value):
        item_path = f"{path}[{i}]"
        if not isinstance(item, dict):
            errors.append(f"[TYPE] {item_path}: expected object (got {type(item).__name__})")
            continue
        errors.extend(validate({**defaults, **item}, item_schema, item_path))
    return errors


def _validate_clients(value, path: str) -> list:
    if isinstance(value, int) and not isinstance(value, bool):
        return [] if value >= 1 else [f"[RANGE] {path}: must be >= 1 (got {value})"]
    if isinstance(value, list):
        if not value:
            return [f"[RANGE] {path}: at least one client required"]
        return _validate_list(value, path, CLIENT_SCHEMA, CLIENT_DEFAULTS)
    return [f"[TYPE] {path}: expected integer or list of clients (got {type(value).__name__})"]


def _validate_interferers(value, path: str) -> list:
    return _validate_list(value, path, INTERFERER_SCHEMA, INTERFERER_DEFAULTS)


_CUSTOM = {
    "clients": _validate_clients,
    "interferers": _validate_interferers,
}


def check_logic(config: dict) -> list:
    """Cross-field consistency (run only once every field is individually valid)."""
    errors = []
    mac = config["mac"]
    if mac["cw_min"] > mac["cw_max"]:
        errors.append(f"[LOGIC] mac.cw_min ({mac['cw_min']}) > mac.cw_max ({mac['cw_max']})")
    if mac["difs_us"] != mac["sifs_us"] + 2 * mac["slot_us"]:
        errors.append(f"[LOGIC] mac.difs_us ({mac['difs_us']}) must equal sifs_us + 2 * slot_us "
                      f"({mac['sifs_us'] + 2 * mac['slot_us']})")

    dl = config["downlink_only"]
    if dl["window_us"] > MAX_RESERVATION_US:
        errors.append(f"[RANGE] downlink_only.window_us: CTS-to-Self reservation is limited to "
                      f"{MAX_RESERVATION_US} us (32 ms), got {dl['window_us']}")
    if dl["window_us"] > dl["period_us"]:
        errors.append(f"[LOGIC] downlink_only.window_us ({dl['window_us']}) > period_us ({dl['period_us']})")

    lb = config["link_budget"]
    if lb["sensitivity_dbm"] <= lb["noise_floor_dbm"]:
        errors.append(f"[LOGIC] link_budget.sensitivity_dbm ({lb['sensitivity_dbm']}) must exceed "
                      f"noise_floor_dbm ({lb['noise_floor_dbm']})")

    ap = config["ap"]
    if ap["integrated_ssid_dbm"] < ap["standard_ssid_dbm"]:
        errors.append(f"[LOGIC] ap.integrated_ssid_dbm ({ap['integrated_ssid_dbm']}) must be >= "
                      f"standard_ssid_dbm ({ap['standard_ssid_dbm']})")

    flow = config["flow"]
    if flow["source"] == SourceKind.CONSTANT_RATE.value and flow["rate_mbps"] is None:
        errors.append("[LOGIC] flow.rate_mbps: required when flow.source is constant_rate")

    for i, item in enumerate(config["interferers"]):
        item = {**INTERFERER_DEFAULTS, **item}
        if item["stop_s"] is not None and item["stop_s"] <= item["start_s"]:
            errors.append(f"[LOGIC] interferers[{i}].stop_s ({item['stop_s']}) must be > start_s ({item['start_s']})")
    return errors


# ============================================================================
# Building
# ============================================================================

def place_clients(n: int, placement: Placement, radius_m: float, ap: ApConfig) -> list:
    """Ring: evenly on a circle around the AP.  Colocated: all at (ap.x + r, ap.y)."""
    positions = []
    for k in range(n):
        if placement is Placement.COLOCATED:
            positions.append((ap.x + radius_m, ap.y))
        else:
            theta = 2.0 * math.pi * k / n
            positions.append((ap.x + radius_m * math.cos(theta), ap.y + radius_m * math.sin(theta)))
    return positions


def _client_spec(entry: dict, mode: Mode, tx_power_dbm: float) -> ClientSpec:
    entry = {**CLIENT_DEFAULTS, **entry}
    client_mode = Mode(entry["mode"]) if entry["mode"] is not None else mode
    if entry["capability"] is not None:
        capability = Capability(entry["capability"])
    else:
        capability = Capability.LEGACY if client_mode is Mode.STANDARD else Capability.INTEGRATED
    power = entry["tx_power_dbm"] if entry["tx_power_dbm"] is not None else tx_power_dbm
    return ClientSpec(float(entry["x"]), float(entry["y"]), client_mode, capability,
                      bool(entry["indoor"]), float(power))


def build_config(merged: dict) -> ScenarioConfig:
    mode = Mode(merged["mode"])
    placement = Placement(merged["placement"])
    ap = ApConfig(**{k: (float(v) if k != "indoor" else v) for k, v in merged["ap"].items()})
    tx_power = float(merged["client_tx_power_dbm"])

    if isinstance(merged["clients"], int):
        entries = [{"x": x, "y": y}
                   for x, y in place_clients(merged["clients"], placement, float(merged["client_radius_m"]), ap)]
    else:
        entries = merged["clients"]
    clients = tuple(_client_spec(e, mode, tx_power) for e in entries)

    lb = merged["link_budget"]
    loose = merged["loose"]
    interferers = tuple(
        InterfererConfig(float(i["x"]), float(i["y"]), float(i["tx_power_dbm"]), float(i["start_s"]),
                         None if i["stop_s"] is None else float(i["stop_s"]), int(i["burst_us"]))
        for i in ({**INTERFERER_DEFAULTS, **raw} for raw in merged["interferers"])
    )
    flow = merged["flow"]
    lte = merged["lte"]
    stop = merged["traffic_stop_s"]

    return ScenarioConfig(
        clients=clients,
        mode=mode,
        duration_s=float(merged["duration_s"]),
        seed=int(merged["seed"]),
        placement=placement,
        client_radius_m=float(merged["client_radius_m"]),
        client_tx_power_dbm=tx_power,
        ap=ap,
        mac=MacParams(**merged["mac"]),
        phy=PhyParams(**merged["phy"]),
        path_loss=PathLossModel(**{k: float(v) for k, v in merged["path_loss"].items()}),
        link_budget=ReceiverConfig(**{k: float(v) for k, v in lb.items()}),
        lte=LteConfig(Duplex(lte["duplex"]), float(lte["dl_capacity_mbps"]), float(lte["ul_capacity_mbps"]),
                      float(lte["total_capacity_mbps"]), float(lte["ul_fraction"]), int(lte["scheduler_epoch_us"])),
        tunnel=TunnelConfig(TunnelPath(merged["tunnel"]["path"]), merged["tunnel"]["one_way_latency_us"],
                            merged["tunnel"]["per_packet_overhead_bytes"]),
        flow=FlowSpec(Direction(flow["direction"]), SourceKind(flow["source"]),
                      None if flow["rate_mbps"] is None else float(flow["rate_mbps"]),
                      flow["segment_bytes"], TransportKind(flow["transport"])),
        ack_policy=AckPolicy(**merged["ack_policy"]),
        loose=LooseConfig(float(loose["wifi_uplink_cost"]), float(loose["wifi_downlink_cost"]),
                          float(loose["lte_uplink_cost"]), float(loose["lte_downlink_cost"]),
                          SchedulerWeights(float(loose["alpha"]), float(loose["beta"]),
                                           float(loose["rtt_ref_us"]), float(loose["bw_ref_mbps"]))),
        tight=TightConfig(**merged["tight"]),
        hybrid=HybridConfig(**merged["hybrid"]),
        mgmt=MgmtConfig(**merged["mgmt"]),
        downlink_only=DownlinkOnlyConfig(**merged["downlink_only"]),
        interferers=interferers,
        traffic_stop_s=None if stop is None else float(stop),
        trace=merged["trace"],
    )


def scenario_from_dict(data: dict) -> ScenarioConfig:
    """Merge defaults, validate, build.  Raises ScenarioError with every problem found."""
    if not isinstance(data, dict):
        raise ScenarioError([f"[TYPE] <root>: expected object (got {type(data).__name__})"])
    merged = deep_merge(DEFAULT_SCENARIO, data)
    errors = validate(merged, SCHEMA)
    if errors:
        raise ScenarioError(errors)
    errors = check_logic(merged)
    if errors:
        raise ScenarioError(errors)
    try:
        return build_config(merged)
    except ValueError as e:
        raise ScenarioError([f"[LOGIC] <root>: {e}"]) from e


def parse_scenario(text: str) -> ScenarioConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError([f"[FORMAT] <root>: invalid JSON: {e}"]) from e
    return scenario_from_dict(data)


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    cfg = parse_scenario(text)
    log.info("loaded scenario %s (%d clients, mode %s)", path, cfg.n_clients, cfg.mode.value)
    return cfg
