#!/usr/bin/env python3
"""
kernel.py - 離散イベントエンジン

Integer-microsecond virtual clock, a heap-ordered event queue with lazy
cancellation, and per-station seeded random streams.

Events fire in (fire_at, sequence) order; sequence is a global insertion
counter so ties resolve in insertion order.
"""

import heapq
import logging
from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np

from hetcell.enums import STREAMS_PER_STATION, StreamPurpose

log = logging.getLogger(__name__)
trace_log = logging.getLogger("hetcell.kernel.trace")

NO_STATION = -1


class KernelError(RuntimeError):
    """Fatal programming error inside a run (never a protocol outcome)."""


# ============================================================================
# Event
# ============================================================================

@dataclass(eq=False)
class Event:
    """Scheduled callback. The Event object itself is the cancellation handle."""
    fire_at: int
    sequence: int
    action: Callable[..., Any]
    args: tuple = ()
    name: str = ""
    station: int = NO_STATION
    active: bool = True

    @property
    def pending(self) -> bool:
        return self.active


@dataclass(frozen=True)
class TraceRecord:
    time_us: int
    station: int
    name: str


# ============================================================================
# Random streams
# ============================================================================

class RngStream:
    """
    Deterministic stream keyed by (seed, stream_id).

    Built on numpy's SeedSequence spawn keys so two streams with different ids
    never overlap and the same pair replays the same draws on any platform.
    """

    def __init__(self, seed: int, stream_id: int):
        if seed < 0 or stream_id < 0:
            raise KernelError(f"seed and stream_id must be non-negative (seed={seed}, stream_id={stream_id})")
        self.seed = seed
        self.stream_id = stream_id
        seq = np.random.SeedSequence(entropy=seed, spawn_key=(stream_id,))
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def uniform_int(self, lo: int, hi: int) -> int:
        return uniform_int(self, lo, hi)

    def random(self) -> float:
        return float(self._gen.random())

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def uniform_int(stream: RngStream, lo: int, hi: int) -> int:
    """Uniform integer in [lo, hi] inclusive."""
    if lo > hi:
        raise KernelError(f"uniform_int: lo ({lo}) > hi ({hi})")
    if lo == hi:
        return lo
    return int(stream._gen.integers(lo, hi + 1))


def stream_id_for(station: int, purpose: StreamPurpose) -> int:
    return station * STREAMS_PER_STATION + int(purpose)


# ============================================================================
# Kernel
# ============================================================================

class Kernel:
    """Single-run discrete-event engine."""

    def __init__(self, seed: int = 0, trace: bool = False):
        self.seed = seed
        self.now = 0
        self.trace_enabled = trace
        self.trace: list[TraceRecord] = []
        self.events_fired = 0
        self._queue: list[tuple[int, int, Event]] = []
        self._sequence = 0
        self._streams: dict[int, RngStream] = {}

    # --- scheduling -------------------------------------------------------

    def schedule(self, fire_at: int, action: Callable[..., Any], *args,
                 name: str = "", station: int = NO_STATION) -> Event:
        if fire_at < self.now:
            raise KernelError(
                f"cannot schedule '{name or getattr(action, '__name__', action)}' "
                f"at t={fire_at} us, clock is already at t={self.now} us")
        event = Event(int(fire_at), self._sequence, action, args, name, station)
        self._sequence += 1
        heapq.heappush(self._queue, (event.fire_at, event.sequence, event))
        return event

    def schedule_in(self, delay_us: int, action: Callable[..., Any], *args,
                    name: str = "", station: int = NO_STATION) -> Event:
        return self.schedule(self.now + delay_us, action, *args, name=name, station=station)

    @staticmethod
    def cancel(event: Optional[Event]) -> None:
        """Cancel a pending event; cancelling None or a fired event is a no-op."""
        if event is not None:
            event.active = False

    # --- execution --------------------------------------------------------

    def run_until(self, t_end: int) -> int:
        """Fire every event with fire_at <= t_end, then leave the clock at t_end."""
        if t_end < self.now:
            raise KernelError(f"run_until({t_end}) is before the clock ({self.now})")
        queue = self._queue
        while queue and queue[0][0] <= t_end:
            fire_at, _, event = heapq.heappop(queue)
            if not event.active:
                continue
            self.now = fire_at
            event.active = False
            self.events_fired += 1
            if self.trace_enabled:
                record = TraceRecord(fire_at, event.station, event.name)
                self.trace.append(record)
                trace_log.debug("%d %d %s", fire_at, event.station, event.name)
            event.action(*event.args)
        self.now = t_end
        return self.now

    def pending_count(self) -> int:
        return sum(1 for _, _, ev in self._queue if ev.active)

    # --- randomness -------------------------------------------------------

    def stream(self, station: int, purpose: StreamPurpose) -> RngStream:
        sid = stream_id_for(station, purpose)
        rng = self._streams.get(sid)
        if rng is None:
            rng = RngStream(self.seed, sid)
            self._streams[sid] = rng
        return rng
