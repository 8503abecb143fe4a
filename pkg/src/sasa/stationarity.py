"""Sample collection for the fluctuation-dissipation stationarity check.

At stationarity of constant-parameter SGM,

    E<x, g> = (alpha/2) (1+beta)/(1-beta) E<d, d>,

so the per-step difference ``z`` should average to zero relative to the
scale term ``v``.  Samples live in HalfQueues, which keep only the most
recent half of everything pushed since the last reset (burn-in).
"""

from __future__ import annotations

import math
from collections import deque
from typing import NamedTuple

import numpy as np

from sasa.errors import InsufficientSamples, NumericalError


def yaida_coefficient(alpha: float, beta: float) -> float:
    """c = (alpha/2) (1+beta)/(1-beta)."""
    return 0.5 * alpha * (1.0 + beta) / (1.0 - beta)


class StatPair(NamedTuple):
    z: float
    v: float


def pair_statistics(x, g, d, alpha: float, beta: float) -> StatPair:
    """z = <x, g> - c |d|^2 and v = c |d|^2 for explicit vectors."""
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if not x.shape == g.shape == d.shape:
        raise ValueError(f"dimension mismatch: x{x.shape}, g{g.shape}, d{d.shape}")
    with np.errstate(over="ignore", invalid="ignore"):  # overflow is reported below
        v = yaida_coefficient(alpha, beta) * float(d @ d)
        z = float(x @ g) - v
    if not (math.isfinite(z) and math.isfinite(v)):
        raise NumericalError(f"statistics overflowed (z={z}, v={v})")
    return StatPair(z=z, v=v)


def collect(state_before, g, d_new, pairing: str = "next") -> StatPair:
    """Statistics for the step taken from ``state_before`` with gradient ``g``.

    ``pairing="next"`` pairs <x_k, g_k> with the fresh direction d_{k+1};
    ``pairing="current"`` pairs it with the pre-step d_k instead.
    """
    if pairing == "next":
        d = d_new
    elif pairing == "current":
        d = state_before.d
    else:
        raise ValueError(f"unknown pairing {pairing!r}")
    return pair_statistics(state_before.x, g, d, state_before.alpha, state_before.beta)


class HalfQueue:
    """FIFO that evicts its oldest element on every second push.

    After n pushes it holds the latest ceil(n/2) values.  A compensated
    running sum tracks the contents so the mean is O(1) and does not drift
    over long runs.
    """

    def __init__(self):
        self._buf = deque()
        self.total_pushed = 0
        self._sum = 0.0
        self._comp = 0.0

    def _accumulate(self, value: float) -> None:
        # Neumaier summation
        t = self._sum + value
        if abs(self._sum) >= abs(value):
            self._comp += (self._sum - t) + value
        else:
            self._comp += (value - t) + self._sum
        self._sum = t

    def push(self, value: float) -> None:
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"HalfQueue only accepts finite values, got {value!r}")
        self._buf.append(value)
        self._accumulate(value)
        self.total_pushed += 1
        if self.total_pushed % 2 == 0:
            self._accumulate(-self._buf.popleft())

    def reset(self) -> None:
        self._buf.clear()
        self.total_pushed = 0
        self._sum = 0.0
        self._comp = 0.0

    def __len__(self) -> int:
        return len(self._buf)

    def __iter__(self):
        return iter(self._buf)

    def __getitem__(self, i):
        return self._buf[i]

    def values(self) -> np.ndarray:
        return np.fromiter(self._buf, dtype=np.float64, count=len(self._buf))

    def __array__(self, dtype=None, copy=None):
        arr = self.values()
        return arr if dtype is None else arr.astype(dtype)

    def mean(self) -> float:
        if not self._buf:
            raise InsufficientSamples("HalfQueue is empty")
        return (self._sum + self._comp) / len(self._buf)

    def __repr__(self) -> str:
        return f"HalfQueue(n={len(self)}, total_pushed={self.total_pushed})"


def running_means(zq: HalfQueue, vq: HalfQueue) -> tuple[float, float, int]:
    """(zbar, vbar, N) over the retained windows; raises InsufficientSamples when empty."""
    if len(zq) != len(vq):
        raise ValueError(f"queue lengths differ: {len(zq)} vs {len(vq)}")
    if len(zq) == 0:
        raise InsufficientSamples("no samples collected since the last reset")
    return zq.mean(), vq.mean(), len(zq)


def reset_all(zq: HalfQueue, vq: HalfQueue) -> None:
    zq.reset()
    vq.reset()
