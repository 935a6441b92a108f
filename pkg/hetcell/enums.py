#!/usr/bin/env python3
# ====================================================
# enums.py
#
# Shared Enum definitions, kept in one place so the
# MAC, LTE and integration layers agree on names.
# ====================================================

from enum import Enum, IntEnum


class Role(Enum):
    """Station role on the Wi-Fi channel

    Values:
        AP: the access point (sid 0)
        CLIENT: a Wi-Fi/LTE client
        INTERFERER: co-channel neighbour that ignores carrier sense
    """
    AP = "ap"
    CLIENT = "client"
    INTERFERER = "interferer"


class FrameKind(Enum):
    """Over-the-air / tunneled frame kinds

    Values:
        DATA: upper-layer data segment
        MAC_ACK: 802.11 acknowledgement (SIFS response)
        CTS_SELF: CTS-to-Self reservation sent by the AP
        MGMT: probe / association management frame
        TRANSPORT_ACK: reliable-transport ACK, carried as a data-class frame
        NOISE: interferer burst
    """
    DATA = "data"
    MAC_ACK = "mac_ack"
    CTS_SELF = "cts_self"
    MGMT = "mgmt"
    TRANSPORT_ACK = "transport_ack"
    NOISE = "noise"


class Phase(Enum):
    """DCF phase of one station"""
    IDLE = "idle"
    DEFERRING = "deferring"
    BACKING_OFF = "backing-off"
    TRANSMITTING = "transmitting"
    AWAITING_ACK = "awaiting-ack"


class Direction(Enum):
    UPLINK = "uplink"
    DOWNLINK = "downlink"
    BIDIRECTIONAL = "bidirectional"


class Mode(Enum):
    """Integration mode of a client

    Values:
        STANDARD: plain Wi-Fi, everything over the air
        LOOSE: multipath transport scheduler picks the subflow
        TIGHT: eNB control unit owns the uplink and splits the downlink bearer
        HYBRID: every uplink frame is tunneled over LTE to the AP
    """
    STANDARD = "standard"
    LOOSE = "loose"
    TIGHT = "tight"
    HYBRID = "hybrid"


class TrafficClass(Enum):
    UL_DATA = "ul_data"
    DL_DATA = "dl_data"
    TRANSPORT_ACK_FOR_DL = "transport_ack_for_dl"
    WIFI_MAC_ACK = "wifi_mac_ack"
    WIFI_MGMT = "wifi_mgmt"


class Interface(Enum):
    """Where a traffic class is carried

    Values:
        WIFI: over the Wi-Fi air interface
        LTE_TUNNEL: over LTE uplink, tunneled to the AP
        LTE_NATIVE: over LTE straight to the server
        PER_SCHEDULER: multipath subflow scheduler decides per segment
        BEARER_SPLIT: eNB bearer splitter decides per control epoch
    """
    WIFI = "wifi"
    LTE_TUNNEL = "lte_tunnel"
    LTE_NATIVE = "lte_native"
    PER_SCHEDULER = "per_scheduler"
    BEARER_SPLIT = "bearer_split"


class Duplex(Enum):
    FDD = "FDD"
    TDD = "TDD"


class TunnelPath(Enum):
    VIA_CORE = "via_core"
    DIRECT = "direct_enb_ap"


class SsidKind(Enum):
    STANDARD_ACCESS = "standard_access"
    INTEGRATED_ACCESS = "integrated_access"


class Capability(Enum):
    LEGACY = "legacy"
    INTEGRATED = "integrated"


class Association(Enum):
    """Association outcome reported per client"""
    ASSOCIATED = "associated"
    LTE_ONLY = "lte_only"
    FAILED = "failed"


class StreamPurpose(IntEnum):
    """Per-station RNG stream purposes; stream_id = sid * STREAMS_PER_STATION + purpose"""
    BACKOFF = 0
    TRAFFIC = 1


STREAMS_PER_STATION = 4


class SourceKind(Enum):
    SATURATED = "saturated"
    CONSTANT_RATE = "constant_rate"


class TransportKind(Enum):
    NONE = "none"
    RELIABLE = "reliable"


class Placement(Enum):
    RING = "ring"
    COLOCATED = "colocated"


class MgmtSubtype(Enum):
    ASSOC_REQUEST = "assoc_request"
    ASSOC_RESPONSE = "assoc_response"
    PROBE_REQUEST = "probe_request"
    PROBE_RESPONSE = "probe_response"
