#!/usr/bin/env python3
"""
traffic.py - トラフィック源・トランスポート・サブフロー選択

Traffic sources (saturated or paced constant-rate), the reliable-transport
receiver that emits delayed transport ACKs, and the loose-mode multipath
scheduler that scores the Wi-Fi and LTE subflows per segment.

The transport has no congestion control and no retransmission; losses are
counted at the MAC.
"""

import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from hetcell.dedup import DuplicateFilter
from hetcell.enums import Direction, Interface, SourceKind, TransportKind
from hetcell.kernel import Event, Kernel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FlowSpec:
    direction: Direction = Direction.BIDIRECTIONAL
    source: SourceKind = SourceKind.SATURATED
    rate_mbps: Optional[float] = None
    segment_bytes: int = 1500
    transport: TransportKind = TransportKind.NONE

    def __post_init__(self):
        if self.segment_bytes <= 0:
            raise ValueError("segment_bytes must be positive")
        if self.source is SourceKind.CONSTANT_RATE and not (self.rate_mbps and self.rate_mbps > 0):
            raise ValueError("constant_rate sources need rate_mbps > 0")

    @property
    def directions(self) -> tuple:
        if self.direction is Direction.BIDIRECTIONAL:
            return (Direction.UPLINK, Direction.DOWNLINK)
        return (self.direction,)


@dataclass(frozen=True)
class AckPolicy:
    segments_per_ack: int = 2
    ack_bytes: int = 40

    def __post_init__(self):
        if self.segments_per_ack < 1:
            raise ValueError("segments_per_ack must be >= 1")
        if self.ack_bytes <= 0:
            raise ValueError("ack_bytes must be positive")


@dataclass(eq=False)
class Segment:
    """One transport segment (or transport ACK) of a client's flow."""
    client: int
    direction: Direction
    seq: int
    nbytes: int
    created_us: int
    is_ack: bool = False
    interface: Optional[Interface] = None
    sent_us: int = -1


# ============================================================================
# Sources
# ============================================================================

class TrafficSource:
    """
    Segment factory for one direction of one client's flow.

    Saturated sources are pulled: next_segment() always returns a segment.
    Constant-rate sources are pushed by start(): one segment at
    start_us + round(k * interval) for k = 0, 1, ...
    """

    def __init__(self, kernel: Kernel, spec: FlowSpec, client: int, direction: Direction,
                 start_us: int = 0, stop_us: Optional[int] = None):
        self.kernel = kernel
        self.spec = spec
        self.client = client
        self.direction = direction
        self.start_us = start_us
        self.stop_us = stop_us
        self.offered = 0
        self._seq = itertools.count(1)
        self._k = 0
        self._pacer: Optional[Event] = None

    @property
    def saturated(self) -> bool:
        return self.spec.source is SourceKind.SATURATED

    @property
    def interval_us(self) -> float:
        if self.saturated:
            return 0.0
        return self.spec.segment_bytes * 8.0 / self.spec.rate_mbps

    def stopped(self) -> bool:
        return self.stop_us is not None and self.kernel.now >= self.stop_us

    def next_segment(self) -> Optional[Segment]:
        if self.stopped():
            return None
        if not self.saturated:
            # segment k is due at start + round(k * interval)
            if self.start_us + round(self.offered * self.interval_us) > self.kernel.now:
                return None
        self.offered += 1
        return Segment(self.client, self.direction, next(self._seq), self.spec.segment_bytes, self.kernel.now)

    def start(self, push: Callable[[Segment], None]) -> None:
        if self.saturated:
            return
        self._push = push
        self._schedule_next()

    def _schedule_next(self) -> None:
        at = self.start_us + round(self._k * self.interval_us)
        if self.stop_us is not None and at >= self.stop_us:
            return
        self._k += 1
        self._pacer = self.kernel.schedule(max(at, self.kernel.now), self._emit,
                                           name="source_tick", station=self.client)

    def _emit(self) -> None:
        seg = self.next_segment()
        if seg is not None:
            self._push(seg)
        self._schedule_next()


# ============================================================================
# Transport receiver
# ============================================================================

class TransportReceiver:
    """Receiving end of one direction of a flow: dedupe, goodput, delayed ACKs."""

    def __init__(self, client: int, direction: Direction, policy: AckPolicy, transport: TransportKind):
        self.client = client
        self.direction = direction
        self.policy = policy
        self.reliable = transport is TransportKind.RELIABLE
        self.delivered = 0
        self.duplicates = 0
        self.acks_emitted = 0
        self.bytes_by_interface: dict[Interface, int] = {}
        self.delay_sum_us = 0
        self._dedup = DuplicateFilter()
        self._ack_seq = itertools.count(1)

    def on_segment_delivered(self, segment: Segment, interface: Interface, now: int) -> Optional[Segment]:
        """Account a delivered segment; returns the transport ACK due, if any."""
        if not self._dedup.is_new(self.client, segment.seq):
            self.duplicates += 1
            return None
        self.delivered += 1
        self.bytes_by_interface[interface] = self.bytes_by_interface.get(interface, 0) + segment.nbytes
        self.delay_sum_us += now - segment.created_us
        if not self.reliable or self.delivered % self.policy.segments_per_ack:
            return None
        self.acks_emitted += 1
        reverse = Direction.DOWNLINK if self.direction is Direction.UPLINK else Direction.UPLINK
        return Segment(self.client, reverse, next(self._ack_seq), self.policy.ack_bytes, now, is_ack=True)

    @property
    def goodput_bytes(self) -> int:
        return sum(self.bytes_by_interface.values())


# ============================================================================
# Loose-mode subflow scheduler
# ============================================================================

@dataclass
class SubflowMetrics:
    configured_cost: float = 0.0
    measured_rtt_us: float = 0.0
    measured_bandwidth_mbps: float = 0.0

    def __post_init__(self):
        if self.configured_cost < 0:
            raise ValueError("configured_cost must be >= 0")

    @property
    def available(self) -> bool:
        return math.isfinite(self.configured_cost)


@dataclass(frozen=True)
class SchedulerWeights:
    alpha: float = 0.0
    beta: float = 0.0
    rtt_ref_us: float = 10000.0
    bw_ref_mbps: float = 54.0


def subflow_score(metrics: SubflowMetrics, weights: SchedulerWeights) -> float:
    if not metrics.available:
        return math.inf
    score = metrics.configured_cost
    if weights.alpha:
        score += weights.alpha * metrics.measured_rtt_us / weights.rtt_ref_us
    if weights.beta:
        score -= weights.beta * metrics.measured_bandwidth_mbps / weights.bw_ref_mbps
    return score


def choose_subflow(wifi: SubflowMetrics, lte: SubflowMetrics, direction: Direction,
                   weights: SchedulerWeights = SchedulerWeights()) -> Optional[Interface]:
    """Lower score wins; ties go to LTE uplink and to Wi-Fi downlink."""
    if not wifi.available and not lte.available:
        return None
    if not wifi.available:
        return Interface.LTE_NATIVE
    if not lte.available:
        return Interface.WIFI
    s_wifi = subflow_score(wifi, weights)
    s_lte = subflow_score(lte, weights)
    if s_wifi < s_lte:
        return Interface.WIFI
    if s_lte < s_wifi:
        return Interface.LTE_NATIVE
    return Interface.LTE_NATIVE if direction is Direction.UPLINK else Interface.WIFI


class SubflowMonitor:
    """Measured RTT (EWMA of twice the one-way delay) and windowed bandwidth of one subflow."""

    def __init__(self, cost: float, window_us: int = 100000, gain: float = 0.125):
        self.cost = cost
        self.window_us = window_us
        self.gain = gain
        self.rtt_us = 0.0
        self._samples: deque[tuple[int, int]] = deque()
        self._window_bytes = 0

    def on_delivery(self, now: int, one_way_us: int, nbytes: int) -> None:
        sample = 2.0 * one_way_us
        if self.rtt_us == 0.0:
            self.rtt_us = sample
        else:
            self.rtt_us += self.gain * (sample - self.rtt_us)
        self._samples.append((now, nbytes))
        self._window_bytes += nbytes
        self._prune(now)

    def _prune(self, now: int) -> None:
        horizon = now - self.window_us
        while self._samples and self._samples[0][0] <= horizon:
            self._window_bytes -= self._samples.popleft()[1]

    def snapshot(self, now: int) -> SubflowMetrics:
        self._prune(now)
        bandwidth = self._window_bytes * 8.0 / self.window_us
        return SubflowMetrics(self.cost, self.rtt_us, bandwidth)


@dataclass
class LooseScheduler:
    """Per-client pair of subflow monitors plus per-direction costs."""
    wifi_uplink_cost: float = 1.0
    wifi_downlink_cost: float = 0.0
    lte_uplink_cost: float = 0.0
    lte_downlink_cost: float = 0.0
    weights: SchedulerWeights = field(default_factory=SchedulerWeights)
    monitors: dict = field(default_factory=dict)
    choices: dict = field(default_factory=dict)

    def monitor(self, interface: Interface, direction: Direction) -> SubflowMonitor:
        key = (interface, direction)
        if key not in self.monitors:
            if interface is Interface.WIFI:
                cost = self.wifi_uplink_cost if direction is Direction.UPLINK else self.wifi_downlink_cost
            else:
                cost = self.lte_uplink_cost if direction is Direction.UPLINK else self.lte_downlink_cost
            self.monitors[key] = SubflowMonitor(cost)
        return self.monitors[key]

    def choose(self, direction: Direction, now: int, wifi_up: bool = True, lte_up: bool = True) -> Optional[Interface]:
        wifi = self.monitor(Interface.WIFI, direction).snapshot(now)
        lte = self.monitor(Interface.LTE_NATIVE, direction).snapshot(now)
        if not wifi_up:
            wifi = SubflowMetrics(math.inf)
        if not lte_up:
            lte = SubflowMetrics(math.inf)
        choice = choose_subflow(wifi, lte, direction, self.weights)
        key = (direction, choice)
        self.choices[key] = self.choices.get(key, 0) + 1
        return choice
