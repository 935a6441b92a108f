#!/usr/bin/env python3
"""
channel.py - 共有無線チャネル

Single Wi-Fi channel shared by the AP, the clients and any co-channel
interferers.  The channel owns:

    - the static rx-power matrix (path loss is deterministic)
    - carrier sense per station (own transmission counts as busy)
    - SINR capture per receiver, re-evaluated whenever a frame begins
    - airtime accounting per frame class, plus idle and overlap time

Stations plug in through the ChannelListener protocol.  At the end of a
transmission the channel works in this order:

    1. decide which receivers decoded the frame
    2. deliver it (receivers may set NAV here)
    3. update carrier sense and notify busy/idle flips
    4. tell the sender its transmission ended
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Protocol

import numpy as np

from hetcell.enums import FrameKind, Role
from hetcell.kernel import Kernel
from hetcell.radio import LinkBudget, PathLossModel, Position, dbm_to_mw, path_loss_db

log = logging.getLogger(__name__)

BROADCAST = -1

AIRTIME_CLASSES = (
    "ul_data", "ul_transport_ack", "ul_mac_ack", "ul_mgmt",
    "dl_data", "dl_transport_ack", "dl_mac_ack", "dl_mgmt", "dl_cts_self",
    "interference",
)

_KIND_SUFFIX = {
    FrameKind.DATA: "data",
    FrameKind.TRANSPORT_ACK: "transport_ack",
    FrameKind.MAC_ACK: "mac_ack",
    FrameKind.MGMT: "mgmt",
    FrameKind.CTS_SELF: "cts_self",
}



# ============================================================================
# Frame
# ============================================================================

@dataclass(eq=False)
class Frame:
    """On-air or tunneled transmission unit."""
    kind: FrameKind
    src: int
    dst: int
    payload_bytes: int
    airtime_us: int = 0
    requires_mac_ack: bool = False
    nav_duration_us: int = 0
    seq: int = 0
    created_us: int = 0
    segment: Any = None
    ack_for: Optional["Frame"] = None
    on_done: Optional[Callable[["Frame", bool], None]] = None
    overlapped: bool = False     # set by the channel when another frame shared the air

    @property
    def is_broadcast(self) -> bool:
        return self.dst == BROADCAST

    def __repr__(self):
        return (f"Frame({self.kind.value} {self.src}->{self.dst} seq={self.seq} "
                f"{self.payload_bytes}B {self.airtime_us}us)")


def airtime_class(frame: Frame, src_role: Role) -> str:
    if src_role is Role.INTERFERER or frame.kind is FrameKind.NOISE:
        return "interference"
    prefix = "dl" if src_role is Role.AP else "ul"
    return f"{prefix}_{_KIND_SUFFIX[frame.kind]}"


class ChannelListener(Protocol):
    def on_medium_change(self) -> None: ...

    def on_frame(self, frame: Frame) -> None: ...

    def on_tx_end(self, frame: Frame) -> None: ...


@dataclass(eq=False)
class Transmission:
    frame: Frame
    src: int
    start_us: int
    end_us: int
    sensed_by: list = field(default_factory=list)


@dataclass
class ChannelStats:
    duration_us: int = 0
    airtime_us: dict = field(default_factory=lambda: {c: 0 for c in AIRTIME_CLASSES})
    idle_us: int = 0
    overlap_us: int = 0
    collisions: int = 0
    frames_sent: int = 0
    frames_decoded: int = 0


# ============================================================================
# Channel
# ============================================================================

class Channel:
    """Shared medium with SINR capture and carrier sense."""

    def __init__(self, kernel: Kernel, model: PathLossModel, budget: LinkBudget,
                 cs_threshold_dbm: float = -82.0):
        self.kernel = kernel
        self.model = model
        self.sensitivity_dbm = budget.sensitivity_dbm
        self.noise_mw = float(dbm_to_mw(budget.noise_floor_dbm))
        self.capture_linear = 10.0 ** (budget.capture_threshold_db / 10.0)
        self.cs_threshold_dbm = cs_threshold_dbm

        self.positions: dict[int, Position] = {}
        self.tx_power_dbm: dict[int, float] = {}
        self.indoor: dict[int, bool] = {}
        self.roles: dict[int, Role] = {}
        self.listeners: dict[int, ChannelListener] = {}
        self._sids: list[int] = []

        self.rx_dbm: list[list[float]] = []
        self.rx_mw: list[list[float]] = []

        self._active: list[Transmission] = []
        self._sensed: list[int] = []
        self._transmitting: list[bool] = []
        self._lock: list[Optional[Transmission]] = []
        self._lock_ok: list[bool] = []

        self.stats = ChannelStats()
        self._last_change = 0
        self._finalized = False

    # --- topology ---------------------------------------------------------

    def add_station(self, sid: int, position: Position, tx_power_dbm: float, role: Role,
                    listener: Optional[ChannelListener] = None, indoor: bool = True) -> None:
        if sid in self.positions:
            raise ValueError(f"station {sid} already on the channel")
        if sid != len(self._sids):
            raise ValueError(f"stations must be added in sid order (expected {len(self._sids)}, got {sid})")
        self._sids.append(sid)
        self.positions[sid] = position
        self.tx_power_dbm[sid] = tx_power_dbm
        self.roles[sid] = role
        self.indoor[sid] = indoor
        if listener is not None:
            self.listeners[sid] = listener

    def attach(self, sid: int, listener: ChannelListener) -> None:
        self.listeners[sid] = listener

    def build(self) -> None:
        """Precompute rx power between every ordered pair of stations."""
        n = len(self._sids)
        loss = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                d = self.positions[i].distance_to(self.positions[j])
                loss[i, j] = path_loss_db(self.model, d, self.indoor[i] != self.indoor[j])
        tx = np.array([self.tx_power_dbm[i] for i in range(n)], dtype=float)
        rx = tx[:, None] - loss
        np.fill_diagonal(rx, -math.inf)
        self.rx_dbm = rx.tolist()
        self.rx_mw = np.where(np.isfinite(rx), np.power(10.0, rx / 10.0), 0.0).tolist()
        self._sensed = [0] * n
        self._transmitting = [False] * n
        self._lock = [None] * n
        self._lock_ok = [False] * n
        log.debug("channel built with %d stations", n)

    # --- queries ----------------------------------------------------------

    def busy(self, sid: int) -> bool:
        return self._transmitting[sid] or self._sensed[sid] > 0

    def is_transmitting(self, sid: int) -> bool:
        return self._transmitting[sid]

    def can_decode(self, src: int, dst: int) -> bool:
        """Link-budget check alone, without interference."""
        return self.rx_dbm[src][dst] >= self.sensitivity_dbm

    @property
    def active_count(self) -> int:
        return len(self._active)

    # --- accounting -------------------------------------------------------

    def _advance(self) -> None:
        now = self.kernel.now
        dt = now - self._last_change
        if dt > 0:
            k = len(self._active)
            if k == 0:
                self.stats.idle_us += dt
            elif k > 1:
                self.stats.overlap_us += (k - 1) * dt
        self._last_change = now

    # --- transmissions ----------------------------------------------------

    def begin_tx(self, src: int, frame: Frame) -> Transmission:
        if self._transmitting[src]:
            raise RuntimeError(f"station {src} is already transmitting")
        now = self.kernel.now
        self._advance()
        frame.overlapped = bool(self._active)
        for other in self._active:
            other.frame.overlapped = True
        tx = Transmission(frame, src, now, now + frame.airtime_us)
        rx_dbm_row = self.rx_dbm[src]
        rx_mw = self.rx_mw

        was_busy = [self.busy(j) for j in self._sids]

        self._active.append(tx)
        self._transmitting[src] = True
        # half duplex: a transmitter loses whatever it was receiving
        self._lock[src] = None
        self._lock_ok[src] = False
        self.stats.frames_sent += 1

        decodable = frame.kind is not FrameKind.NOISE
        for j in self._sids:
            if j == src:
                continue
            if rx_dbm_row[j] >= self.cs_threshold_dbm:
                self._sensed[j] += 1
                tx.sensed_by.append(j)
            if self._transmitting[j]:
                continue
            total = self.noise_mw
            for a in self._active:
                total += rx_mw[a.src][j]
            lock = self._lock[j]
            if lock is not None and self._lock_ok[j]:
                p = rx_mw[lock.src][j]
                if p < self.capture_linear * (total - p):
                    self._lock_ok[j] = False
            if decodable and rx_dbm_row[j] >= self.sensitivity_dbm:
                p = rx_mw[src][j]
                if p >= self.capture_linear * (total - p):
                    self._lock[j] = tx
                    self._lock_ok[j] = True

        self.kernel.schedule(tx.end_us, self._end_tx, tx, name="tx_end", station=src)
        for j in self._sids:
            if not was_busy[j] and self.busy(j):
                listener = self.listeners.get(j)
                if listener is not None:
                    listener.on_medium_change()
        return tx

    def _end_tx(self, tx: Transmission) -> None:
        self._advance()
        self._active.remove(tx)
        frame = tx.frame
        src = tx.src

        decoded = []
        for j in self._sids:
            if self._lock[j] is tx:
                if self._lock_ok[j]:
                    decoded.append(j)
                self._lock[j] = None
                self._lock_ok[j] = False

        if (frame.kind is not FrameKind.NOISE and not frame.is_broadcast
                and frame.dst not in decoded and self.rx_dbm[src][frame.dst] >= self.sensitivity_dbm):
            self.stats.collisions += 1

        self.stats.airtime_us[airtime_class(frame, self.roles[src])] += frame.airtime_us
        self.stats.frames_decoded += len(decoded)

        for j in decoded:
            listener = self.listeners.get(j)
            if listener is not None:
                listener.on_frame(frame)

        was_busy = {j: self.busy(j) for j in tx.sensed_by}
        was_busy[src] = True
        for j in tx.sensed_by:
            self._sensed[j] -= 1
        self._transmitting[src] = False
        for j, before in was_busy.items():
            if before and not self.busy(j):
                listener = self.listeners.get(j)
                if listener is not None:
                    listener.on_medium_change()

        listener = self.listeners.get(src)
        if listener is not None:
            listener.on_tx_end(frame)

    def finalize(self, t_end: int) -> ChannelStats:
        """Close the accounting at t_end; frames still on air count up to t_end."""
        if self._finalized:
            return self.stats
        self._advance()
        for tx in self._active:
            self.stats.airtime_us[airtime_class(tx.frame, self.roles[tx.src])] += max(0, t_end - tx.start_us)
        self.stats.duration_us = t_end
        self._finalized = True
        return self.stats
