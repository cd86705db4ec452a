"""Adaptive-windowing change detector over a stream of 0/1 outcomes.

The window is kept as an exponential histogram: buckets of size 2^k, at most
M_BUCKETS buckets per size class, oldest bucket first. Inserting costs
amortized O(1); the cut check walks every bucket boundary and drops the
older sub-window whenever the two sides' means differ by more than the cut
threshold

    eps_cut = sqrt( ln(4 * width / delta) / (2 * m) ),   m = 1 / (1/n0 + 1/n1)

so the detector's memory is O(M log width) while behaving like a sliding
window that automatically shrinks on distribution change.
"""
from __future__ import annotations

import math

from ..errors import ConfigError

M_BUCKETS = 5  # size classes keep at most this many buckets before merging


class AdwinDetector:
    __slots__ = ("delta", "width", "total", "_buckets", "_counts")

    def __init__(self, delta: float):
        if not 0.0 < delta < 1.0:
            raise ConfigError(f"adwin delta must be in (0,1), got {delta}")
        self.delta = delta
        self.width = 0
        self.total = 0.0
        self._buckets: list[list[float]] = []  # [size, sum], buckets[0] oldest
        self._counts: dict[int, int] = {}

    @property
    def mean(self) -> float:
        return self.total / self.width if self.width else 0.0

    def update(self, bit: float) -> bool:
        """Insert one value; returns True if a change was detected (and the
        older part of the window dropped)."""
        value = float(bit)
        self._buckets.append([1, value])
        self._counts[1] = self._counts.get(1, 0) + 1
        self.width += 1
        self.total += value
        self._compress()
        return self._detect_cut()

    # -- internals ----------------------------------------------------------

    def _compress(self) -> None:
        size = 1
        while self._counts.get(size, 0) > M_BUCKETS:
            # buckets of equal size are contiguous; merge the two oldest
            i = next(
                idx for idx, b in enumerate(self._buckets) if b[0] == size
            )
            a, b = self._buckets[i], self._buckets[i + 1]
            self._buckets[i : i + 2] = [[size * 2, a[1] + b[1]]]
            self._counts[size] -= 2
            self._counts[size * 2] = self._counts.get(size * 2, 0) + 1
            size *= 2

    def _cut_threshold(self, n0: float, n1: float) -> float:
        m = 1.0 / (1.0 / n0 + 1.0 / n1)
        return math.sqrt(math.log(4.0 * self.width / self.delta) / (2.0 * m))

    def _detect_cut(self) -> bool:
        detected = False
        shrunk = True
        while shrunk and len(self._buckets) > 1:
            shrunk = False
            n0 = 0.0
            u0 = 0.0
            for i in range(len(self._buckets) - 1):
                n0 += self._buckets[i][0]
                u0 += self._buckets[i][1]
                n1 = self.width - n0
                u1 = self.total - u0
                if abs(u0 / n0 - u1 / n1) > self._cut_threshold(n0, n1):
                    self._drop_oldest(i + 1)
                    detected = True
                    shrunk = True
                    break
        return detected

    def _drop_oldest(self, count: int) -> None:
        for size, total in self._buckets[:count]:
            self.width -= int(size)
            self.total -= total
            self._counts[int(size)] -= 1
        del self._buckets[:count]
