#!/usr/bin/env python3
"""
radio.py - 伝搬・SINR・エアタイム計算

Deterministic log-distance propagation, linear-domain SINR, the capture rule
used by the channel, 802.11a OFDM frame airtime and the closed-form
link-budget range used by the coverage report.

All functions here are pure; they take value objects and return numbers.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

# 802.11a OFDM: data bits carried per 4 us symbol at each rate
OFDM_BITS_PER_SYMBOL = {6: 24, 9: 36, 12: 48, 18: 72, 24: 96, 36: 144, 48: 192, 54: 216}

SERVICE_BITS = 16
TAIL_BITS = 6
MAC_HEADER_BYTES = 28     # header + FCS on DATA / MGMT / TRANSPORT_ACK
CONTROL_FRAME_BYTES = 14  # ACK and CTS


def dbm_to_mw(dbm):
    return np.power(10.0, np.asarray(dbm, dtype=float) / 10.0)


def mw_to_dbm(mw):
    return 10.0 * np.log10(mw)


# ============================================================================
# Value types
# ============================================================================

@dataclass(frozen=True)
class Position:
    x: float = 0.0
    y: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"position must be finite, got ({self.x}, {self.y})")

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class PathLossModel:
    exponent: float = 4.0
    reference_loss_db: float = 40.0
    reference_distance_m: float = 1.0
    wall_penetration_db: float = 0.0

    def __post_init__(self):
        if self.exponent <= 0:
            raise ValueError("exponent must be positive")
        if self.reference_loss_db < 0:
            raise ValueError("reference_loss_db must be >= 0")
        if self.reference_distance_m <= 0:
            raise ValueError("reference_distance_m must be positive")
        if self.wall_penetration_db < 0:
            raise ValueError("wall_penetration_db must be >= 0")


@dataclass(frozen=True)
class LinkBudget:
    tx_power_dbm: float
    sensitivity_dbm: float = -76.0
    noise_floor_dbm: float = -95.0
    capture_threshold_db: float = 10.0

    def __post_init__(self):
        if self.sensitivity_dbm <= self.noise_floor_dbm:
            raise ValueError(
                f"sensitivity_dbm ({self.sensitivity_dbm}) must exceed noise_floor_dbm ({self.noise_floor_dbm})")


@dataclass(frozen=True)
class PhyParams:
    data_rate_mbps: int = 54
    control_rate_mbps: int = 24
    preamble_us: int = 20
    symbol_us: int = 4
    bits_per_symbol: dict = field(default_factory=lambda: dict(OFDM_BITS_PER_SYMBOL))

    def __post_init__(self):
        for rate in (self.data_rate_mbps, self.control_rate_mbps):
            if rate not in self.bits_per_symbol:
                raise ValueError(f"unsupported OFDM rate {rate} Mbps")
        if self.preamble_us <= 0 or self.symbol_us <= 0:
            raise ValueError("preamble_us and symbol_us must be positive")

    def __hash__(self):
        return hash((self.data_rate_mbps, self.control_rate_mbps, self.preamble_us,
                     self.symbol_us, tuple(sorted(self.bits_per_symbol.items()))))

    def data_airtime_us(self, payload_bytes: int) -> int:
        """Airtime of a data-rate frame carrying payload_bytes above the MAC header."""
        return frame_airtime_us(payload_bytes + MAC_HEADER_BYTES, self.data_rate_mbps, self)

    def control_airtime_us(self, frame_bytes: int = CONTROL_FRAME_BYTES) -> int:
        return frame_airtime_us(frame_bytes, self.control_rate_mbps, self)


# ============================================================================
# Propagation
# ============================================================================

def path_loss_db(model: PathLossModel, distance_m: float, crosses_wall: bool = False) -> float:
    """
    Log-distance path loss.

    Distances below the reference distance clamp to reference_loss_db.
    """
    d = max(float(distance_m), model.reference_distance_m)
    loss = model.reference_loss_db + 10.0 * model.exponent * math.log10(d / model.reference_distance_m)
    if crosses_wall:
        loss += model.wall_penetration_db
    return loss


def sinr_db(target_rx_dbm: float, interferer_rx_dbm: Sequence[float], noise_floor_dbm: float) -> float:
    """Target power over the linear sum of interference plus noise, in dB."""
    denom_mw = float(dbm_to_mw(noise_floor_dbm))
    if len(interferer_rx_dbm):
        denom_mw += float(np.sum(dbm_to_mw(interferer_rx_dbm)))
    return float(target_rx_dbm - mw_to_dbm(denom_mw))


def capture_decision(rx_dbm: Sequence[float], noise_floor_dbm: float,
                     capture_threshold_db: float, sensitivity_dbm: float) -> Optional[int]:
    """
    Index of the frame decoded out of an overlap group, or None on collision loss.

    Only the strongest frame is a candidate; it survives iff it clears the
    sensitivity and its SINR against every other frame clears the threshold.
    """
    if not len(rx_dbm):
        raise ValueError("capture_decision needs at least one frame")
    powers = np.asarray(rx_dbm, dtype=float)
    best = int(np.argmax(powers))
    if powers[best] < sensitivity_dbm:
        return None
    others = np.delete(powers, best)
    if sinr_db(powers[best], others, noise_floor_dbm) < capture_threshold_db:
        return None
    return best


def frame_airtime_us(payload_bytes: int, rate_mbps: int, phy: PhyParams) -> int:
    """preamble + ceil((service + 8*bytes + tail) / bits_per_symbol) symbols."""
    if payload_bytes < 0:
        raise ValueError("payload_bytes must be >= 0")
    bps = phy.bits_per_symbol[rate_mbps]
    bits = SERVICE_BITS + 8 * int(payload_bytes) + TAIL_BITS
    symbols = -(-bits // bps)
    return phy.preamble_us + symbols * phy.symbol_us


# ============================================================================
# Coverage
# ============================================================================

def max_range_m(budget: LinkBudget, model: PathLossModel, crosses_wall: bool = False) -> float:
    """Largest distance at which tx_power - path_loss >= sensitivity; 0.0 if none."""
    margin = budget.tx_power_dbm - budget.sensitivity_dbm - model.reference_loss_db
    if crosses_wall:
        margin -= model.wall_penetration_db
    if margin < 0:
        return 0.0
    return model.reference_distance_m * 10.0 ** (margin / (10.0 * model.exponent))


def range_ratio(p_high_mw: float, p_low_mw: float, exponent: float) -> float:
    if p_high_mw <= 0 or p_low_mw <= 0:
        raise ValueError("powers must be positive")
    if exponent <= 0:
        raise ValueError("exponent must be positive")
    return (p_high_mw / p_low_mw) ** (1.0 / exponent)


def area_ratio(p_high_mw: float, p_low_mw: float, exponent: float) -> float:
    return range_ratio(p_high_mw, p_low_mw, exponent) ** 2
