#!/usr/bin/env python3
"""
integration.py - Wi-Fi/LTE 統合モード

Per-mode routing of traffic classes across Wi-Fi and LTE, the tight-mode
downlink bearer splitter, hybrid-mode tunnel termination at the AP
(including the tunnel-ACK retransmission timer) and the dual-SSID
connection manager.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from hetcell.channel import Frame
from hetcell.dedup import DuplicateFilter
from hetcell.enums import Capability, FrameKind, Interface, Mode, SsidKind, TrafficClass
from hetcell.kernel import Event, Kernel

log = logging.getLogger(__name__)


# ============================================================================
# Routing policy
# ============================================================================

_UPLINK_CONTROL = (TrafficClass.WIFI_MAC_ACK, TrafficClass.WIFI_MGMT)

ROUTING_POLICY: dict[tuple[Mode, TrafficClass], Interface] = {
    **{(Mode.STANDARD, c): Interface.WIFI for c in TrafficClass},

    (Mode.LOOSE, TrafficClass.UL_DATA): Interface.PER_SCHEDULER,
    (Mode.LOOSE, TrafficClass.DL_DATA): Interface.PER_SCHEDULER,
    (Mode.LOOSE, TrafficClass.TRANSPORT_ACK_FOR_DL): Interface.WIFI,
    **{(Mode.LOOSE, c): Interface.WIFI for c in _UPLINK_CONTROL},

    (Mode.TIGHT, TrafficClass.UL_DATA): Interface.LTE_NATIVE,
    (Mode.TIGHT, TrafficClass.DL_DATA): Interface.BEARER_SPLIT,
    (Mode.TIGHT, TrafficClass.TRANSPORT_ACK_FOR_DL): Interface.LTE_NATIVE,
    **{(Mode.TIGHT, c): Interface.WIFI for c in _UPLINK_CONTROL},

    (Mode.HYBRID, TrafficClass.UL_DATA): Interface.LTE_TUNNEL,
    (Mode.HYBRID, TrafficClass.DL_DATA): Interface.WIFI,
    (Mode.HYBRID, TrafficClass.TRANSPORT_ACK_FOR_DL): Interface.LTE_TUNNEL,
    **{(Mode.HYBRID, c): Interface.LTE_TUNNEL for c in _UPLINK_CONTROL},
}


def route(mode: Mode, traffic_class: TrafficClass) -> Interface:
    return ROUTING_POLICY[(mode, traffic_class)]


# ============================================================================
# Tight mode: downlink bearer split
# ============================================================================

def split_downlink_bearer(backlog_bytes: int, wifi_drain_mbps: float, lte_drain_mbps: float) -> tuple[int, int]:
    """
    Proportional split of backlog_bytes by drain rate.

    Both drains zero holds the backlog: (0, 0).
    """
    if wifi_drain_mbps < 0 or lte_drain_mbps < 0:
        raise ValueError("drain rates must be >= 0")
    total = wifi_drain_mbps + lte_drain_mbps
    if total <= 0:
        return 0, 0
    to_wifi = int(round(backlog_bytes * wifi_drain_mbps / total))
    return to_wifi, backlog_bytes - to_wifi


@dataclass
class SplitDecision:
    time_us: int
    wifi_drain_mbps: float
    lte_drain_mbps: float
    wifi_bytes: int
    lte_bytes: int


class BearerSplitter:
    """
    eNB-side control unit for one tight-mode client's downlink bearer.

    Every control epoch it measures how many bytes each lane drained and
    re-splits the backlog target.  A lane that was empty for the whole epoch
    falls back to its bootstrap rate instead of a fresh (meaningless) zero.
    """

    LANES = (Interface.WIFI, Interface.LTE_NATIVE)

    def __init__(self, kernel: Kernel, client: int, epoch_us: int, segment_bytes: int,
                 wifi_bootstrap_mbps: float, lte_bootstrap_mbps: float, min_segments: int = 2,
                 on_update: Optional[Callable[[], None]] = None):
        self.kernel = kernel
        self.client = client
        self.epoch_us = epoch_us
        self.segment_bytes = segment_bytes
        self.min_segments = min_segments
        self.on_update = on_update
        self._bootstrap = {Interface.WIFI: wifi_bootstrap_mbps, Interface.LTE_NATIVE: lte_bootstrap_mbps}
        self.drain_mbps = dict(self._bootstrap)
        self.outstanding = {lane: 0 for lane in self.LANES}
        self.targets = {lane: 0 for lane in self.LANES}
        self.history: list[SplitDecision] = []
        self._drained = {lane: 0 for lane in self.LANES}
        self._busy = {lane: False for lane in self.LANES}
        self._event: Optional[Event] = None
        self._resplit()

    def start(self) -> None:
        self._event = self.kernel.schedule_in(self.epoch_us, self._epoch, name="bearer_split",
                                              station=self.client)

    def stop(self) -> None:
        self.kernel.cancel(self._event)

    def on_enqueue(self, lane: Interface, nbytes: int) -> None:
        self.outstanding[lane] += nbytes
        self._busy[lane] = True

    def on_drain(self, lane: Interface, nbytes: int) -> None:
        self.outstanding[lane] -= nbytes
        self._drained[lane] += nbytes

    def lane_wants(self, lane: Interface) -> bool:
        return self.outstanding[lane] < self.targets[lane]

    def _epoch(self) -> None:
        for lane in self.LANES:
            if self._busy[lane]:
                self.drain_mbps[lane] = self._drained[lane] * 8.0 / self.epoch_us
            elif self.drain_mbps[lane] == 0.0:
                # idle and written off: retry at the bootstrap rate
                self.drain_mbps[lane] = self._bootstrap[lane]
            self._drained[lane] = 0
            self._busy[lane] = self.outstanding[lane] > 0
        self._resplit()
        self._event = self.kernel.schedule_in(self.epoch_us, self._epoch, name="bearer_split",
                                              station=self.client)
        if self.on_update is not None:
            self.on_update()

    def _resplit(self) -> None:
        wifi = self.drain_mbps[Interface.WIFI]
        lte = self.drain_mbps[Interface.LTE_NATIVE]
        backlog = max(int(2 * (wifi + lte) * self.epoch_us / 8), self.min_segments * self.segment_bytes)
        to_wifi, to_lte = split_downlink_bearer(backlog, wifi, lte)
        self.targets[Interface.WIFI] = to_wifi
        self.targets[Interface.LTE_NATIVE] = to_lte
        self.history.append(SplitDecision(self.kernel.now, wifi, lte, to_wifi, to_lte))


# ============================================================================
# Hybrid mode: tunnel ACK tracking at the AP
# ============================================================================

class HybridAckTracker:
    """
    AP-side retransmission timer for downlink frames to hybrid clients.

    Their MAC ACKs come back through the LTE tunnel, so the AP does not wait
    on the air; it arms a timer per frame and re-queues the frame at the
    head of its queue when the timer expires.  State for a frame is dropped
    as soon as it is acknowledged or given up on.
    """

    def __init__(self, kernel: Kernel, timeout_us: int, retry_limit: Optional[int],
                 requeue: Callable[[Frame], None],
                 on_final: Optional[Callable[[Frame, bool], None]] = None):
        self.kernel = kernel
        self.timeout_us = timeout_us
        self.retry_limit = retry_limit
        self.requeue = requeue
        self.on_final = on_final
        self.retransmissions = 0
        self.late_acks = 0
        self.drops = 0
        self.acked = 0
        self._pending: dict[Frame, Event] = {}
        self._attempts: dict[Frame, int] = {}
        # re-queued copies acknowledged late; skipped when they reach the air
        self._cancelled: set[Frame] = set()

    def sent(self, frame: Frame) -> bool:
        """Arm the timer for a frame that just left the AP; True on its first transmission."""
        if frame in self._cancelled:
            self._cancelled.discard(frame)
            return False
        first = frame not in self._attempts
        self._attempts[frame] = self._attempts.get(frame, 0) + 1
        self._pending[frame] = self.kernel.schedule_in(self.timeout_us, self._timeout, frame,
                                                       name="hybrid_ack_timeout", station=frame.dst)
        return first

    def ack(self, ack: Frame) -> None:
        target = ack.ack_for
        if target is None:
            return
        timer = self._pending.pop(target, None)
        if timer is None:
            self.late_acks += 1
            if target in self._attempts:
                self._cancelled.add(target)
                self._finish(target, True)
            return
        self.kernel.cancel(timer)
        self._finish(target, True)

    def _timeout(self, frame: Frame) -> None:
        self._pending.pop(frame, None)
        if self.retry_limit is not None and self._attempts[frame] > self.retry_limit:
            self.drops += 1
            self._finish(frame, False)
            return
        self.retransmissions += 1
        self.requeue(frame)

    def _finish(self, frame: Frame, success: bool) -> None:
        self._attempts.pop(frame, None)
        if success:
            self.acked += 1
        if self.on_final is not None:
            self.on_final(frame, success)

    @property
    def pending_count(self) -> int:
        return len(self._pending)

    @property
    def tracked_count(self) -> int:
        return len(self._attempts) + len(self._cancelled)


# ============================================================================
# AP tunnel termination
# ============================================================================

class ApIngest:
    """
    Single entry point for frames reaching the AP's stack, over the air or
    out of the tunnel.  Tunneled frames are processed exactly like decoded
    ones; MAC ACKs go to the hybrid tracker.
    """

    def __init__(self, tracker: Optional[HybridAckTracker],
                 handler: Callable[[Frame, Interface], None]):
        self.tracker = tracker
        self.handler = handler
        self.uplink_bytes: dict[Interface, int] = {}
        self._dedup = DuplicateFilter()

    @property
    def duplicates(self) -> int:
        return self._dedup.duplicates

    def ingest(self, frame: Frame, via: Interface) -> None:
        # over-the-air duplicates are already filtered by the MAC
        if via is Interface.LTE_TUNNEL and not self._dedup.is_new(frame.src, frame.seq):
            return
        self.uplink_bytes[via] = self.uplink_bytes.get(via, 0) + frame.payload_bytes
        if frame.kind is FrameKind.MAC_ACK:
            if self.tracker is not None:
                self.tracker.ack(frame)
            return
        self.handler(frame, via)

    def from_air(self, frame: Frame) -> None:
        self.ingest(frame, Interface.WIFI)

    def from_tunnel(self, frame: Frame) -> None:
        self.ingest(frame, Interface.LTE_TUNNEL)


def ap_ingest(ingest: ApIngest, frame: Frame) -> None:
    """Inject a tunneled frame where a radio decode would have delivered it."""
    ingest.from_tunnel(frame)


# ============================================================================
# Connection manager
# ============================================================================

@dataclass(frozen=True)
class SsidAdvert:
    ssid_kind: SsidKind
    tx_power_dbm: float


def decodable_ssids(adverts: Iterable[SsidAdvert], loss_db: float, sensitivity_dbm: float) -> set:
    return {a for a in adverts if a.tx_power_dbm - loss_db >= sensitivity_dbm}


def select_mode(decodable: Iterable[SsidAdvert], capability: Capability,
                preference: Mode = Mode.HYBRID) -> Optional[Mode]:
    """
    Mode a client connects in, or None for LTE-only.

    Legacy clients only see the standard SSID.  Integrated clients that hear
    only the full-power integrated SSID must go hybrid; when they hear both
    they follow the configured preference, standard included.
    """
    kinds = {a.ssid_kind for a in decodable}
    if capability is Capability.LEGACY:
        return Mode.STANDARD if SsidKind.STANDARD_ACCESS in kinds else None
    if not kinds:
        return None
    if kinds == {SsidKind.INTEGRATED_ACCESS}:
        return Mode.HYBRID
    if SsidKind.INTEGRATED_ACCESS in kinds:
        return preference
    # only the standard SSID: loose and tight ride a plain association
    return preference if preference is not Mode.HYBRID else Mode.STANDARD
