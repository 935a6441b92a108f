#!/usr/bin/env python3
"""
metrics.py - 実行結果レポートと CSV / JSON 出力

MetricsReport is the outcome of one run.  CSV output is one row per run
with the fixed CSV_COLUMNS list (schema version 1); sweep tables prepend
"axis" and "value".  JSON output keeps the report's field order and
echoes the normalized scenario under "config".
"""

import io
import json
import logging
from dataclasses import dataclass, field
from typing import Union

import pandas as pd

from hetcell.channel import AIRTIME_CLASSES

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

GOODPUT_KEYS = (
    ("uplink", "wifi"), ("uplink", "lte_native"), ("uplink", "lte_tunnel"),
    ("downlink", "wifi"), ("downlink", "lte_native"),
)

CSV_COLUMNS = [
    "schema_version", "mode", "n_clients", "seed", "duration_us",
    "ul_goodput_mbps", "dl_goodput_mbps", "total_goodput_mbps",
    *[f"{'ul' if d == 'uplink' else 'dl'}_{i}_mbps" for d, i in GOODPUT_KEYS],
    "collisions", "tx_attempts", "retransmissions", "drops",
    "hybrid_retransmissions", "late_tunnel_acks", "duplicates",
    *[f"airtime_{c}_us" for c in AIRTIME_CLASSES],
    "wifi_uplink_airtime_us", "idle_us", "overlap_us",
    "lte_ul_utilization", "lte_dl_utilization",
    "tunnel_sent_bytes", "tunnel_ingested_bytes", "tunnel_mean_latency_us",
    "transport_acks_sent", "transport_acks_received",
    "associated", "lte_only", "failed",
]

TABLE_COLUMNS = ["axis", "value", *CSV_COLUMNS]

CSV_FLOAT_FORMAT = "%.6f"


@dataclass
class StationReport:
    sid: int
    x: float
    y: float
    configured_mode: str
    mode: str | None
    association: str
    uplink_mbps: float = 0.0
    downlink_mbps: float = 0.0
    bytes_by_interface: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "sid": self.sid,
            "x": self.x,
            "y": self.y,
            "configured_mode": self.configured_mode,
            "mode": self.mode,
            "association": self.association,
            "uplink_mbps": self.uplink_mbps,
            "downlink_mbps": self.downlink_mbps,
            "bytes_by_interface": dict(self.bytes_by_interface),
        }


@dataclass
class MetricsReport:
    mode: str
    n_clients: int
    seed: int
    duration_us: int
    goodput_bytes: dict = field(default_factory=dict)     # "uplink/wifi" -> bytes
    collisions: int = 0
    tx_attempts: int = 0
    retransmissions: int = 0
    drops: int = 0
    hybrid_retransmissions: int = 0
    late_tunnel_acks: int = 0
    duplicates: int = 0
    airtime_us: dict = field(default_factory=lambda: {c: 0 for c in AIRTIME_CLASSES})
    idle_us: int = 0
    overlap_us: int = 0
    lte: dict = field(default_factory=dict)
    tunnel: dict = field(default_factory=dict)
    transport_acks_sent: int = 0
    transport_acks_received: int = 0
    association: dict = field(default_factory=dict)
    stations: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    # --- derived ----------------------------------------------------------

    def _mbps(self, nbytes: int) -> float:
        return nbytes * 8.0 / self.duration_us if self.duration_us else 0.0

    def goodput_mbps(self, direction: str, interface: str | None = None) -> float:
        total = 0
        for key, nbytes in self.goodput_bytes.items():
            d, i = key.split("/")
            if d == direction and (interface is None or i == interface):
                total += nbytes
        return self._mbps(total)

    @property
    def total_goodput_mbps(self) -> float:
        return self.goodput_mbps("uplink") + self.goodput_mbps("downlink")

    @property
    def wifi_uplink_airtime_us(self) -> int:
        return sum(v for k, v in self.airtime_us.items() if k.startswith("ul_"))

    @property
    def accounted_us(self) -> int:
        """Σ class airtime - overlap + idle; equals duration_us."""
        return sum(self.airtime_us.values()) - self.overlap_us + self.idle_us

    # --- serialization ----------------------------------------------------

    def summary_row(self) -> dict:
        row = {
            "schema_version": SCHEMA_VERSION,
            "mode": self.mode,
            "n_clients": self.n_clients,
            "seed": self.seed,
            "duration_us": self.duration_us,
            "ul_goodput_mbps": self.goodput_mbps("uplink"),
            "dl_goodput_mbps": self.goodput_mbps("downlink"),
            "total_goodput_mbps": self.total_goodput_mbps,
        }
        for d, i in GOODPUT_KEYS:
            row[f"{'ul' if d == 'uplink' else 'dl'}_{i}_mbps"] = self.goodput_mbps(d, i)
        row.update({
            "collisions": self.collisions,
            "tx_attempts": self.tx_attempts,
            "retransmissions": self.retransmissions,
            "drops": self.drops,
            "hybrid_retransmissions": self.hybrid_retransmissions,
            "late_tunnel_acks": self.late_tunnel_acks,
            "duplicates": self.duplicates,
        })
        for c in AIRTIME_CLASSES:
            row[f"airtime_{c}_us"] = self.airtime_us.get(c, 0)
        row.update({
            "wifi_uplink_airtime_us": self.wifi_uplink_airtime_us,
            "idle_us": self.idle_us,
            "overlap_us": self.overlap_us,
            "lte_ul_utilization": float(self.lte.get("ul_utilization", 0.0)),
            "lte_dl_utilization": float(self.lte.get("dl_utilization", 0.0)),
            "tunnel_sent_bytes": self.tunnel.get("sent_bytes", 0),
            "tunnel_ingested_bytes": self.tunnel.get("ingested_bytes", 0),
            "tunnel_mean_latency_us": float(self.tunnel.get("mean_latency_us", 0.0)),
            "transport_acks_sent": self.transport_acks_sent,
            "transport_acks_received": self.transport_acks_received,
            "associated": self.association.get("associated", 0),
            "lte_only": self.association.get("lte_only", 0),
            "failed": self.association.get("failed", 0),
        })
        return {k: row[k] for k in CSV_COLUMNS}

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "summary": self.summary_row(),
            "goodput_bytes": dict(sorted(self.goodput_bytes.items())),
            "airtime_us": {c: self.airtime_us.get(c, 0) for c in AIRTIME_CLASSES},
            "lte": dict(self.lte),
            "tunnel": dict(self.tunnel),
            "association": dict(self.association),
            "stations": [s.to_dict() for s in self.stations],
            "config": self.config,
        }


@dataclass
class ReportTable:
    """Sweep output: one report per axis value, in the order the values were given."""
    axis: str
    rows: list = field(default_factory=list)     # [(value, MetricsReport)]

    def frame(self) -> pd.DataFrame:
        records = [{"axis": self.axis, "value": value, **report.summary_row()} for value, report in self.rows]
        return pd.DataFrame(records, columns=TABLE_COLUMNS)

    def to_dict(self) -> dict:
        return {
            "axis": self.axis,
            "rows": [{"value": value, "report": report.to_dict()} for value, report in self.rows],
        }


def _csv(df: pd.DataFrame) -> str:
    buf = io.StringIO()
    df.to_csv(buf, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    return buf.getvalue()


def emit(result: Union[MetricsReport, ReportTable], fmt: str = "csv") -> str:
    """Serialize a report or sweep table as csv or json text."""
    if fmt == "csv":
        if isinstance(result, ReportTable):
            return _csv(result.frame())
        return _csv(pd.DataFrame([result.summary_row()], columns=CSV_COLUMNS))
    if fmt == "json":
        return json.dumps(result.to_dict(), indent=2) + "\n"
    raise ValueError(f"unknown format '{fmt}' (expected csv or json)")


def read_csv(text: str) -> pd.DataFrame:
    return pd.read_csv(io.StringIO(text))
