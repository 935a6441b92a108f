#!/usr/bin/env python3
"""
mac.py - CSMA/CA DCF ステートマシン

One Dcf instance per Wi-Fi station.  Implements:

    - DIFS deferral and slotted binary-exponential backoff with freeze/resume
    - MAC ACK after SIFS (responses bypass carrier sense and NAV)
    - ACK timeout, retry counting, drop after retry_limit
    - NAV from CTS-to-Self and from overheard unicast frames
    - AP downlink-only windows: CTS-to-Self won through DCF, then
      SIFS-separated downlink frames until the reservation ends

Backoff slots are counted from the point the medium last became idle plus
DIFS, so the access instant is

    max(idle_since + DIFS + backoff * slot, now)

and a busy transition consumes the whole slots that elapsed since then.
"""

import itertools
import logging
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

from hetcell.channel import BROADCAST, Channel, Frame
from hetcell.dedup import DuplicateFilter
from hetcell.enums import FrameKind, Phase, Role
from hetcell.kernel import Event, Kernel, RngStream, uniform_int
from hetcell.radio import CONTROL_FRAME_BYTES, PhyParams

log = logging.getLogger(__name__)


def is_cw_value(value: int) -> bool:
    """True for 2^k - 1 (k >= 0)."""
    return isinstance(value, int) and value >= 0 and (value + 1) & value == 0


@dataclass(frozen=True)
class MacParams:
    slot_us: int = 9
    sifs_us: int = 16
    difs_us: int = 34
    cw_min: int = 15
    cw_max: int = 1023
    retry_limit: Optional[int] = 7   # None = unlimited
    ack_timeout_us: Optional[int] = None

    def __post_init__(self):
        if not is_cw_value(self.cw_min):
            raise ValueError(f"cw_min must be 2^k - 1, got {self.cw_min}")
        if not is_cw_value(self.cw_max):
            raise ValueError(f"cw_max must be 2^k - 1, got {self.cw_max}")
        if self.cw_min > self.cw_max:
            raise ValueError(f"cw_min ({self.cw_min}) > cw_max ({self.cw_max})")
        if self.difs_us != self.sifs_us + 2 * self.slot_us:
            raise ValueError("difs_us must equal sifs_us + 2 * slot_us")
        if self.retry_limit is not None and self.retry_limit < 0:
            raise ValueError("retry_limit must be >= 0")

    def resolved_ack_timeout_us(self, phy: PhyParams) -> int:
        if self.ack_timeout_us is not None:
            return self.ack_timeout_us
        return self.sifs_us + phy.control_airtime_us() + 2 * self.slot_us


@dataclass
class MacStats:
    accesses: int = 0
    tx_attempts: int = 0
    successes: int = 0
    retransmissions: int = 0
    drops: int = 0
    acks_sent: int = 0
    duplicates: int = 0
    reservations_lost: int = 0


def frame_airtime(frame: Frame, phy: PhyParams) -> int:
    if frame.kind in (FrameKind.MAC_ACK, FrameKind.CTS_SELF):
        return phy.control_airtime_us(frame.payload_bytes)
    return phy.data_airtime_us(frame.payload_bytes)


# ============================================================================
# DCF
# ============================================================================

class Dcf:
    """DCF state of one station; also its channel listener."""

    def __init__(self, sid: int, kernel: Kernel, channel: Channel, params: MacParams,
                 phy: PhyParams, rng: RngStream, role: Role = Role.CLIENT):
        self.sid = sid
        self.kernel = kernel
        self.channel = channel
        self.params = params
        self.phy = phy
        self.rng = rng
        self.role = role

        self.queue: deque[Frame] = deque()
        self.phase = Phase.IDLE
        self.cw_floor = params.cw_min
        self.cw = params.cw_min
        self.retry = 0
        self.backoff: Optional[int] = None
        self.nav_until = 0
        self.idle_since = 0
        self.nav_windows: list[tuple[int, int]] = []
        self.reservations: list[tuple[int, int]] = []

        self.ack_airtime_us = phy.control_airtime_us()
        self.ack_timeout_us = params.resolved_ack_timeout_us(phy)

        # upper layer hooks
        self.receive_handler: Optional[Callable[[Frame], None]] = None
        self.ack_redirect: Optional[Callable[[Frame], None]] = None

        self.stats = MacStats()

        self._idle = True
        self._responding = False
        self._awaiting: Optional[Frame] = None
        self._access_event: Optional[Event] = None
        self._ack_timer: Optional[Event] = None
        self._nav_event: Optional[Event] = None
        self._burst_until: Optional[int] = None
        self._burst_event: Optional[Event] = None
        self._seq = itertools.count(1)
        self._dedup = DuplicateFilter()

        channel.attach(sid, self)

    # ------------------------------------------------------------------
    # queue
    # ------------------------------------------------------------------

    def enqueue(self, frame: Frame, front: bool = False) -> None:
        if frame.seq == 0:
            frame.seq = next(self._seq)
        if frame.airtime_us == 0:
            frame.airtime_us = frame_airtime(frame, self.phy)
        if front:
            # the head may be on air or awaiting its ACK
            if self.queue and self.phase in (Phase.TRANSMITTING, Phase.AWAITING_ACK):
                self.queue.insert(1, frame)
            else:
                self.queue.appendleft(frame)
        else:
            self.queue.append(frame)
        self._try_access()

    def set_cw_floor(self, cw_floor: int) -> None:
        """Retune the minimum contention window (integrated-mode AP)."""
        self.cw_floor = cw_floor
        if self.retry == 0:
            self.cw = cw_floor

    def request_reservation(self, window_us: int) -> bool:
        """Queue a CTS-to-Self reserving window_us of downlink-only airtime."""
        if any(f.kind is FrameKind.CTS_SELF for f in self.queue) or self._burst_until is not None:
            return False
        cts = Frame(FrameKind.CTS_SELF, self.sid, self.sid, CONTROL_FRAME_BYTES,
                    nav_duration_us=window_us, created_us=self.kernel.now)
        self.enqueue(cts, front=True)
        return True

    # ------------------------------------------------------------------
    # medium state
    # ------------------------------------------------------------------

    def _medium_idle(self) -> bool:
        return (not self.channel.busy(self.sid) and self.kernel.now >= self.nav_until
                and not self._responding)

    def _reevaluate(self) -> None:
        idle = self._medium_idle()
        if idle == self._idle:
            return
        self._idle = idle
        if idle:
            self.idle_since = self.kernel.now
            self._on_idle()
        else:
            self._on_busy()

    def on_medium_change(self) -> None:
        self._reevaluate()

    def _on_busy(self) -> None:
        ev = self._access_event
        if ev is not None and ev.pending and ev.fire_at <= self.kernel.now:
            # same-slot start: the transmission goes ahead and collides
            return
        self._freeze()
        if ev is not None:
            self.kernel.cancel(ev)
            self._access_event = None
            if self.phase is Phase.BACKING_OFF:
                self.phase = Phase.DEFERRING

    def _freeze(self) -> None:
        if not self.backoff:
            return
        count_from = self.idle_since + self.params.difs_us
        elapsed = self.kernel.now - count_from
        if elapsed > 0:
            self.backoff = max(0, self.backoff - elapsed // self.params.slot_us)

    def _on_idle(self) -> None:
        self._try_access()

    def set_nav(self, until: int) -> None:
        if until <= self.nav_until:
            return
        self.nav_until = until
        self.kernel.cancel(self._nav_event)
        self._nav_event = self.kernel.schedule(until, self._nav_expire, name="nav_expire", station=self.sid)
        self._reevaluate()

    def _nav_expire(self) -> None:
        self._nav_event = None
        self._reevaluate()

    # ------------------------------------------------------------------
    # access
    # ------------------------------------------------------------------

    def _draw_backoff(self) -> None:
        self.backoff = uniform_int(self.rng, 0, self.cw)

    def _try_access(self) -> None:
        if self.phase in (Phase.TRANSMITTING, Phase.AWAITING_ACK) or self._burst_until is not None:
            return
        if not self.queue:
            self.phase = Phase.IDLE
            return
        if self._access_event is not None and self._access_event.pending:
            return
        if self.backoff is None:
            self._draw_backoff()
        self._reevaluate()
        if not self._idle:
            self.phase = Phase.DEFERRING
            return
        if self._access_event is not None and self._access_event.pending:
            return
        at = max(self.idle_since + self.params.difs_us + self.backoff * self.params.slot_us, self.kernel.now)
        self.phase = Phase.BACKING_OFF
        self._access_event = self.kernel.schedule(at, self._fire_access, name="access", station=self.sid)

    def _fire_access(self) -> None:
        self._access_event = None
        if not self.queue:
            self.phase = Phase.IDLE
            return
        self.stats.accesses += 1
        self.backoff = None
        self._transmit(self.queue[0])

    def _transmit(self, frame: Frame) -> None:
        self.phase = Phase.TRANSMITTING
        self.stats.tx_attempts += 1
        self.channel.begin_tx(self.sid, frame)

    # ------------------------------------------------------------------
    # channel callbacks
    # ------------------------------------------------------------------

    def on_tx_end(self, frame: Frame) -> None:
        if frame.kind is FrameKind.MAC_ACK:
            self._responding = False
            self._reevaluate()
            self._try_access()
            return
        if frame.kind is FrameKind.CTS_SELF:
            if frame.overlapped:
                # stations that sent during the CTS hold no NAV; skip this window
                self.stats.reservations_lost += 1
                log.debug("t=%d AP %d CTS-to-Self overlapped, no window", self.kernel.now, self.sid)
            else:
                end = self.kernel.now + frame.nav_duration_us
                self._burst_until = end
                self.reservations.append((self.kernel.now, end))
                log.debug("t=%d AP %d reserved downlink until %d", self.kernel.now, self.sid, end)
        if frame.requires_mac_ack:
            self.phase = Phase.AWAITING_ACK
            self._awaiting = frame
            self._ack_timer = self.kernel.schedule_in(self.ack_timeout_us, self._ack_timeout,
                                                      name="ack_timeout", station=self.sid)
        else:
            self._complete()

    def on_frame(self, frame: Frame) -> None:
        now = self.kernel.now
        if frame.kind is FrameKind.MAC_ACK:
            if frame.dst == self.sid and self._awaiting is not None and frame.ack_for is self._awaiting:
                self.kernel.cancel(self._ack_timer)
                self._ack_timer = None
                self._awaiting = None
                self._complete()
            return
        if frame.kind is FrameKind.CTS_SELF:
            end = now + frame.nav_duration_us
            self.nav_windows.append((now, end))
            self.set_nav(end)
            return
        if frame.dst == self.sid or frame.dst == BROADCAST:
            # tunneled-ACK stations acknowledge every unicast frame, the AP never waits on air
            if frame.requires_mac_ack or (self.ack_redirect is not None and frame.dst == self.sid):
                self._respond_ack(frame)
            if not self._dedup.is_new(frame.src, frame.seq):
                self.stats.duplicates += 1
                return
            if self.receive_handler is not None:
                self.receive_handler(frame)
        elif frame.requires_mac_ack:
            self.set_nav(now + self.params.sifs_us + self.ack_airtime_us)

    # ------------------------------------------------------------------
    # acknowledgements
    # ------------------------------------------------------------------

    def _respond_ack(self, frame: Frame) -> None:
        ack = Frame(FrameKind.MAC_ACK, self.sid, frame.src, CONTROL_FRAME_BYTES,
                    airtime_us=self.ack_airtime_us, ack_for=frame, created_us=self.kernel.now)
        if self.ack_redirect is not None:
            self.stats.acks_sent += 1
            self.ack_redirect(ack)
            return
        if self._responding:
            return
        self._responding = True
        self._reevaluate()
        self.kernel.schedule_in(self.params.sifs_us, self._send_response, ack,
                                name="ack_response", station=self.sid)

    def _send_response(self, ack: Frame) -> None:
        if self.channel.is_transmitting(self.sid):
            self._responding = False
            self._reevaluate()
            return
        self.stats.acks_sent += 1
        self.channel.begin_tx(self.sid, ack)

    def _ack_timeout(self) -> None:
        self._ack_timer = None
        self._awaiting = None
        self._fail()

    # ------------------------------------------------------------------
    # outcomes
    # ------------------------------------------------------------------

    def _complete(self) -> None:
        frame = self.queue.popleft()
        self.stats.successes += 1
        self.retry = 0
        self.cw = self.cw_floor
        self._draw_backoff()
        self.phase = Phase.IDLE
        if frame.on_done is not None:
            frame.on_done(frame, True)
        self._continue()

    def _fail(self) -> None:
        frame = self.queue[0]
        self.retry += 1
        limit = self.params.retry_limit
        self.phase = Phase.IDLE
        if limit is not None and self.retry > limit:
            self.queue.popleft()
            self.stats.drops += 1
            self.retry = 0
            self.cw = self.cw_floor
            self._draw_backoff()
            log.debug("t=%d station %d dropped %r", self.kernel.now, self.sid, frame)
            if frame.on_done is not None:
                frame.on_done(frame, False)
        else:
            self.stats.retransmissions += 1
            self.cw = min(2 * (self.cw + 1) - 1, self.params.cw_max)
            self._draw_backoff()
        self._continue()

    def _continue(self) -> None:
        if self._burst_until is not None:
            self._burst_next()
        else:
            self._try_access()

    # ------------------------------------------------------------------
    # downlink-only burst
    # ------------------------------------------------------------------

    def _burst_next(self) -> None:
        if not self.queue:
            self._end_burst()
            return
        frame = self.queue[0]
        needed = self.params.sifs_us + frame.airtime_us
        if frame.requires_mac_ack:
            needed += self.params.sifs_us + self.ack_airtime_us
        if self.kernel.now + needed > self._burst_until:
            self._end_burst()
            return
        self._burst_event = self.kernel.schedule_in(self.params.sifs_us, self._burst_send,
                                                    name="burst_tx", station=self.sid)

    def _burst_send(self) -> None:
        self._burst_event = None
        if not self.queue or self.channel.is_transmitting(self.sid):
            self._end_burst()
            return
        self._transmit(self.queue[0])

    def _end_burst(self) -> None:
        self._burst_until = None
        self.kernel.cancel(self._burst_event)
        self._burst_event = None
        self._try_access()

    def __repr__(self):
        return f"Dcf(sid={self.sid}, phase={self.phase.value}, q={len(self.queue)}, cw={self.cw})"


# ============================================================================
# Co-channel interferer
# ============================================================================

class Interferer:
    """Neighbour transmitter that ignores carrier sense and sends back-to-back bursts."""

    def __init__(self, sid: int, kernel: Kernel, channel: Channel,
                 start_us: int, stop_us: Optional[int], burst_us: int):
        self.sid = sid
        self.kernel = kernel
        self.channel = channel
        self.start_us = start_us
        self.stop_us = stop_us
        self.burst_us = burst_us
        self.bursts = 0
        channel.attach(sid, self)

    def start(self) -> None:
        self.kernel.schedule(self.start_us, self._burst, name="interferer_burst", station=self.sid)

    def _burst(self) -> None:
        if self.stop_us is not None and self.kernel.now >= self.stop_us:
            return
        airtime = self.burst_us
        if self.stop_us is not None:
            airtime = min(airtime, self.stop_us - self.kernel.now)
        noise = Frame(FrameKind.NOISE, self.sid, BROADCAST, 0, airtime_us=airtime)
        self.bursts += 1
        self.channel.begin_tx(self.sid, noise)

    def on_medium_change(self) -> None:
        pass

    def on_frame(self, frame: Frame) -> None:
        pass

    def on_tx_end(self, frame: Frame) -> None:
        self._burst()
