#!/usr/bin/env python3
"""
lte.py - LTE容量パイプとトンネル

LTE is a contention-free capacity pipe.  Each direction has its own
scheduler that wakes every scheduler epoch, turns the configured capacity
into a byte budget (carrying the fractional byte forward) and splits it
equally between backlogged stations, water-filling any unused share.
Per-station queues drain FIFO and never drop.

The Tunnel carries hybrid-mode uplink Wi-Fi frames over the LTE uplink to
the AP: each frame costs payload + overhead bytes of uplink grant and is
handed to the AP one_way_latency_us after its grant completes.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from hetcell.enums import Direction, Duplex, TunnelPath
from hetcell.kernel import Event, Kernel

log = logging.getLogger(__name__)

TUNNEL_DEFAULT_LATENCY_US = {
    TunnelPath.VIA_CORE: 10000,
    TunnelPath.DIRECT: 2000,
}


@dataclass(frozen=True)
class LteConfig:
    duplex: Duplex = Duplex.FDD
    dl_capacity_mbps: float = 100.0
    ul_capacity_mbps: float = 50.0
    total_capacity_mbps: float = 100.0
    ul_fraction: float = 0.5
    scheduler_epoch_us: int = 1000

    def __post_init__(self):
        if min(self.dl_capacity_mbps, self.ul_capacity_mbps, self.total_capacity_mbps) < 0:
            raise ValueError("LTE capacities must be >= 0")
        if not 0.0 <= self.ul_fraction <= 1.0:
            raise ValueError(f"ul_fraction must be in [0, 1], got {self.ul_fraction}")
        if self.scheduler_epoch_us <= 0:
            raise ValueError("scheduler_epoch_us must be positive")


@dataclass(frozen=True)
class TunnelConfig:
    path: TunnelPath = TunnelPath.VIA_CORE
    one_way_latency_us: Optional[int] = None   # None = default for the path
    per_packet_overhead_bytes: int = 40

    def __post_init__(self):
        if self.one_way_latency_us is not None and self.one_way_latency_us < 0:
            raise ValueError("one_way_latency_us must be >= 0")
        if self.per_packet_overhead_bytes < 0:
            raise ValueError("per_packet_overhead_bytes must be >= 0")

    @property
    def latency_us(self) -> int:
        if self.one_way_latency_us is not None:
            return self.one_way_latency_us
        return TUNNEL_DEFAULT_LATENCY_US[self.path]


def lte_capacity(config: LteConfig, direction: Direction) -> float:
    """Capacity in Mbps for one direction."""
    if direction is Direction.BIDIRECTIONAL:
        raise ValueError("lte_capacity takes uplink or downlink")
    if config.duplex is Duplex.FDD:
        return config.ul_capacity_mbps if direction is Direction.UPLINK else config.dl_capacity_mbps
    share = config.ul_fraction if direction is Direction.UPLINK else 1.0 - config.ul_fraction
    return config.total_capacity_mbps * share


# ============================================================================
# Scheduler
# ============================================================================

@dataclass(eq=False)
class LteItem:
    station: int
    nbytes: int
    remaining: int
    enqueued_us: int
    payload: Any = None
    on_sent: Optional[Callable[["LteItem"], None]] = None
    on_delivered: Optional[Callable[["LteItem"], None]] = None
    sent_us: int = -1


@dataclass
class LteDirectionStats:
    granted_bytes: int = 0
    delivered_items: int = 0
    epochs: int = 0
    per_station_bytes: dict = field(default_factory=dict)


class LteScheduler:
    """Equal-share epoch scheduler for one LTE direction."""

    def __init__(self, kernel: Kernel, direction: Direction, capacity_mbps: float, epoch_us: int = 1000):
        self.kernel = kernel
        self.direction = direction
        self.capacity_mbps = capacity_mbps
        self.epoch_us = epoch_us
        self.queues: dict[int, deque[LteItem]] = {}
        self.stats = LteDirectionStats()
        self._bytes_per_epoch = capacity_mbps * epoch_us / 8.0
        self._carry = 0.0
        self._rotate = 0
        self._tick: Optional[Event] = None
        self._last_tick = -1

    # --- queue ------------------------------------------------------------

    def enqueue(self, station: int, nbytes: int, payload: Any = None,
                on_sent: Optional[Callable[[LteItem], None]] = None,
                on_delivered: Optional[Callable[[LteItem], None]] = None) -> LteItem:
        if nbytes <= 0:
            raise ValueError("LTE items must carry at least one byte")
        item = LteItem(station, nbytes, nbytes, self.kernel.now, payload, on_sent, on_delivered)
        self.queues.setdefault(station, deque()).append(item)
        self._arm()
        return item

    def backlog_bytes(self, station: Optional[int] = None) -> int:
        if station is not None:
            return sum(i.remaining for i in self.queues.get(station, ()))
        return sum(i.remaining for q in self.queues.values() for i in q)

    def backlogged(self) -> list[int]:
        return [s for s in sorted(self.queues) if self.queues[s]]

    # --- epochs -----------------------------------------------------------

    def _arm(self) -> None:
        if self._tick is not None or self._bytes_per_epoch <= 0:
            return
        now = self.kernel.now
        at = -(-now // self.epoch_us) * self.epoch_us
        if at <= self._last_tick:
            at = self._last_tick + self.epoch_us
        self._tick = self.kernel.schedule(at, self._epoch, name=f"lte_{self.direction.value}_epoch")

    def _epoch(self) -> None:
        self._tick = None
        self._last_tick = self.kernel.now
        self.stats.epochs += 1
        budget = self._bytes_per_epoch + self._carry
        whole = int(budget)
        self._carry = budget - whole
        delivered_at = self.kernel.now + self.epoch_us

        while whole > 0:
            active = self.backlogged()
            if not active:
                break
            n = len(active)
            share, extra = divmod(whole, n)
            start = self._rotate % n
            granted_round = 0
            for k in range(n):
                sid = active[(start + k) % n]
                alloc = share + (1 if k < extra else 0)
                if alloc:
                    granted_round += self._serve(sid, alloc, delivered_at)
            self._rotate += 1
            whole -= granted_round
            if granted_round == 0:
                break

        if self.backlogged():
            self._arm()
        else:
            # an idle pipe does not bank capacity
            self._carry = 0.0

    def _serve(self, sid: int, alloc: int, delivered_at: int) -> int:
        queue = self.queues[sid]
        used = 0
        while queue and used < alloc:
            item = queue[0]
            take = min(item.remaining, alloc - used)
            item.remaining -= take
            used += take
            if item.remaining == 0:
                queue.popleft()
                item.sent_us = self.kernel.now
                self.stats.delivered_items += 1
                if item.on_delivered is not None:
                    self.kernel.schedule(delivered_at, item.on_delivered, item,
                                         name=f"lte_{self.direction.value}_delivery", station=sid)
                if item.on_sent is not None:
                    item.on_sent(item)
        self.stats.granted_bytes += used
        self.stats.per_station_bytes[sid] = self.stats.per_station_bytes.get(sid, 0) + used
        return used

    def utilization(self, duration_us: int) -> float:
        if self.capacity_mbps <= 0 or duration_us <= 0:
            return 0.0
        return self.stats.granted_bytes * 8.0 / (self.capacity_mbps * duration_us)


class LteLink:
    """Both directions of the LTE pipe."""

    def __init__(self, kernel: Kernel, config: LteConfig):
        self.config = config
        self.uplink = LteScheduler(kernel, Direction.UPLINK, lte_capacity(config, Direction.UPLINK),
                                   config.scheduler_epoch_us)
        self.downlink = LteScheduler(kernel, Direction.DOWNLINK, lte_capacity(config, Direction.DOWNLINK),
                                     config.scheduler_epoch_us)

    def enqueue_uplink(self, station: int, nbytes: int, **kwargs) -> LteItem:
        return self.uplink.enqueue(station, nbytes, **kwargs)

    def enqueue_downlink(self, station: int, nbytes: int, **kwargs) -> LteItem:
        return self.downlink.enqueue(station, nbytes, **kwargs)


# ============================================================================
# Tunnel
# ============================================================================

@dataclass
class TunnelStats:
    sent_frames: int = 0
    sent_bytes: int = 0
    ingested_frames: int = 0
    ingested_bytes: int = 0
    total_latency_us: int = 0
    total_transit_us: int = 0

    @property
    def in_flight_frames(self) -> int:
        return self.sent_frames - self.ingested_frames

    @property
    def mean_latency_us(self) -> float:
        return self.total_latency_us / self.ingested_frames if self.ingested_frames else 0.0

    @property
    def mean_transit_us(self) -> float:
        return self.total_transit_us / self.ingested_frames if self.ingested_frames else 0.0


class Tunnel:
    """Client-to-AP tunnel over the LTE uplink."""

    def __init__(self, kernel: Kernel, link: LteLink, config: TunnelConfig,
                 ingest: Callable[[Any], None]):
        self.kernel = kernel
        self.link = link
        self.config = config
        self.ingest = ingest
        self.stats = TunnelStats()
        self._seq: dict[int, int] = {}

    def send(self, frame, on_sent: Optional[Callable[[LteItem], None]] = None) -> LteItem:
        """tunnel_send: consume payload + overhead bytes of uplink grant, then ingest at the AP."""
        if frame.seq == 0:
            # tunnel sequence space, one per client
            frame.seq = self._seq.get(frame.src, 0) + 1
            self._seq[frame.src] = frame.seq
        wire = frame.payload_bytes + self.config.per_packet_overhead_bytes
        self.stats.sent_frames += 1
        self.stats.sent_bytes += frame.payload_bytes
        return self.link.enqueue_uplink(frame.src, wire, payload=frame, on_sent=on_sent,
                                        on_delivered=self._granted)

    def _granted(self, item: LteItem) -> None:
        self.kernel.schedule_in(self.config.latency_us, self._arrive, item, self.kernel.now,
                                name="tunnel_ingest", station=item.station)

    def _arrive(self, item: LteItem, granted_us: int) -> None:
        frame = item.payload
        now = self.kernel.now
        self.stats.ingested_frames += 1
        self.stats.ingested_bytes += frame.payload_bytes
        self.stats.total_latency_us += now - item.enqueued_us
        self.stats.total_transit_us += now - granted_us
        self.ingest(frame)
