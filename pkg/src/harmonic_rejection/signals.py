"""Harmonic disturbance source and a delay line for sampled signals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class HarmonicDisturbance:
    """``offset + amplitude * sin(frequency * t + phase)``."""

    amplitude: float
    frequency: float
    phase: float = 0.0
    offset: float = 0.0
    omega_min: float | None = None
    omega_max: float | None = None

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be nonnegative")
        if self.omega_min is not None and self.omega_max is not None:
            if not 0 < self.omega_min < self.frequency < self.omega_max < math.inf:
                raise ValueError(
                    f"frequency {self.frequency} outside ({self.omega_min}, {self.omega_max})"
                )

    def __call__(self, t):
        return disturbance_eval(self, t)


def disturbance_eval(d: HarmonicDisturbance, t):
    return d.offset + d.amplitude * np.sin(d.frequency * t + d.phase)


class InsufficientHistory(LookupError):
    """Raised when a delayed read reaches past the oldest stored sample."""


class DelayBuffer:
    """Ring buffer of ``(t, value)`` samples with linearly interpolated reads.

    Reads that land on a stored timestamp return the stored value unchanged,
    so delays that are integer multiples of the sampling step are exact.
    """

    def __init__(self, capacity: int, step: float):
        if capacity < 2:
            raise ValueError("capacity must be at least 2")
        self.capacity = int(capacity)
        self.step = float(step)
        self._t = np.empty(self.capacity)
        self._v = np.empty(self.capacity)
        self._head = 0  # next write slot
        self._count = 0

    @classmethod
    def for_delay(cls, tau_max: float, step: float, margin: int = 10) -> DelayBuffer:
        return cls(math.ceil(2 * tau_max / step) + 2 + margin, step)

    def __len__(self) -> int:
        return self._count

    @property
    def oldest_time(self) -> float:
        if self._count == 0:
            raise InsufficientHistory("buffer is empty")
        return float(self._t[(self._head - self._count) % self.capacity])

    @property
    def latest_time(self) -> float:
        if self._count == 0:
            raise InsufficientHistory("buffer is empty")
        return float(self._t[(self._head - 1) % self.capacity])

    def push(self, t: float, v: float) -> None:
        if self._count and not t > self.latest_time:
            raise ValueError(f"non-monotone timestamp {t} <= {self.latest_time}")
        self._t[self._head] = t
        self._v[self._head] = v
        self._head = (self._head + 1) % self.capacity
        self._count = min(self._count + 1, self.capacity)

    def _ordered(self) -> tuple[np.ndarray, np.ndarray]:
        idx = (self._head - self._count + np.arange(self._count)) % self.capacity
        return self._t[idx], self._v[idx]

    def sample(self, t_query: float) -> float:
        # round-off in t - tau must not turn an exact read into an interpolated one
        snap = 1e-9 * self.step
        if self._count == 0 or t_query < self.oldest_time - snap:
            raise InsufficientHistory(f"no history at t={t_query}")
        if t_query > self.latest_time + snap:
            raise InsufficientHistory(f"t={t_query} is after the newest sample")
        ts, vs = self._ordered()
        i = int(np.searchsorted(ts, t_query))
        for j in (i - 1, i):
            if 0 <= j < len(ts) and abs(ts[j] - t_query) <= snap:
                return float(vs[j])
        t0, t1 = ts[i - 1], ts[i]
        v0, v1 = vs[i - 1], vs[i]
        return float(v0 + (v1 - v0) * (t_query - t0) / (t1 - t0))

    def lag(self, m: int) -> float:
        """Sample stored ``m`` pushes before the newest one."""
        if m >= self._count:
            raise InsufficientHistory(f"only {self._count} samples stored")
        return float(self._v[(self._head - 1 - m) % self.capacity])


def buffer_push(buf: DelayBuffer, t: float, v: float) -> None:
    buf.push(t, v)


def buffer_sample(buf: DelayBuffer, t_query: float) -> float:
    return buf.sample(t_query)
