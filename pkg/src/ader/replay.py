"""FIFO experience replay with uniform sampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Transition:
    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray
    done: bool  # true terminal only; timeouts keep done=False


@dataclass
class Batch:
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s_next: np.ndarray
    done: np.ndarray

    def __len__(self):
        return len(self.r)

    def transitions(self) -> list[Transition]:
        return [Transition(self.s[i], self.a[i], float(self.r[i]), self.s_next[i], bool(self.done[i]))
                for i in range(len(self))]


class ReplayBuffer:
    """Ring buffer of transitions. Storage is allocated on the first push,
    once observation and action widths are known."""

    def __init__(self, capacity: int = 1_000_000):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.size = 0
        self._next = 0
        self._s = self._a = self._r = self._s2 = self._d = None

    def __len__(self):
        return self.size

    def push(self, t: Transition) -> None:
        s = np.asarray(t.s, dtype=np.float64).ravel()
        s2 = np.asarray(t.s_next, dtype=np.float64).ravel()
        a = np.asarray(t.a, dtype=np.float64).ravel()
        if s.shape != s2.shape:
            raise ValueError(f"state {s.shape} and next state {s2.shape} differ")
        if not np.isfinite(t.r):
            raise ValueError("reward must be finite")
        if np.any(np.abs(a) > 1.0):
            raise ValueError("action components must lie in [-1, 1]")
        if self._s is None:
            self._s = np.empty((self.capacity, s.size))
            self._s2 = np.empty((self.capacity, s.size))
            self._a = np.empty((self.capacity, a.size))
            self._r = np.empty(self.capacity)
            self._d = np.empty(self.capacity, dtype=bool)
        elif s.size != self._s.shape[1] or a.size != self._a.shape[1]:
            raise ValueError(
                f"transition dims (s={s.size}, a={a.size}) do not match stored "
                f"(s={self._s.shape[1]}, a={self._a.shape[1]})"
            )
        i = self._next
        self._s[i], self._a[i], self._r[i], self._s2[i], self._d[i] = s, a, t.r, s2, bool(t.done)
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def _ordered_indices(self) -> np.ndarray:
        start = self._next if self.size == self.capacity else 0
        return (start + np.arange(self.size)) % self.capacity

    def contents(self) -> list[Transition]:
        """Stored transitions, oldest first."""
        return self.gather(self._ordered_indices()).transitions() if self.size else []

    def gather(self, idx: np.ndarray) -> Batch:
        # fancy indexing copies, so callers never alias storage
        return Batch(self._s[idx], self._a[idx], self._r[idx], self._s2[idx], self._d[idx])

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        if batch_size < 1:
            raise ValueError("batch_size must be positive")
        return rng.integers(0, self.size, size=batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Uniform draws with replacement."""
        return self.gather(self.sample_indices(batch_size, rng))
