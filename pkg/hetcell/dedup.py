#!/usr/bin/env python3
"""
dedup.py - 重複検出 (シーケンス番号ウィンドウ)

Receivers remember recent sequence numbers per source inside a sliding
window of WINDOW numbers behind the highest one seen.  Anything older than
the window counts as already delivered.  Memory stays bounded for any run
length.
"""

WINDOW = 4096


class SeqWindow:
    """Seen-set for one source's sequence numbers."""

    def __init__(self, window: int = WINDOW):
        self.window = window
        self.highest = 0
        self._seen: set[int] = set()

    def check_and_add(self, seq: int) -> bool:
        """True if seq is new (and records it); False for a duplicate."""
        if seq in self._seen or seq <= self.highest - self.window:
            return False
        self._seen.add(seq)
        if seq > self.highest:
            self.highest = seq
        if len(self._seen) > 2 * self.window:
            floor = self.highest - self.window
            self._seen = {s for s in self._seen if s > floor}
        return True

    def __len__(self):
        return len(self._seen)


class DuplicateFilter:
    """Per-source SeqWindows, keyed by source station."""

    def __init__(self, window: int = WINDOW):
        self.window = window
        self.duplicates = 0
        self._sources: dict[int, SeqWindow] = {}

    def is_new(self, src: int, seq: int) -> bool:
        win = self._sources.get(src)
        if win is None:
            win = self._sources[src] = SeqWindow(self.window)
        if win.check_and_add(seq):
            return True
        self.duplicates += 1
        return False

    def tracked(self, src: int) -> int:
        win = self._sources.get(src)
        return len(win) if win is not None else 0
