"""Stochastic gradient with momentum (SGM) at fixed step size.

The normalized update used throughout the package is

    d_{k+1} = (1 - beta) g_k + beta d_k
    x_{k+1} = x_k - alpha d_{k+1}

which, for constant parameters, is the usual heavy-ball update
``d = g + beta d; x -= alpha' d`` with ``alpha' = alpha (1 - beta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from sasa.errors import NumericalError


def as_param_vector(values, name: str = "x") -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D vector, got shape {arr.shape}")
    _require_finite(arr, name)
    return arr


def _require_finite(arr: np.ndarray, name: str) -> None:
    if not np.isfinite(arr).all():
        idx = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise NumericalError(f"{name}[{idx}] is not finite ({arr[idx]!r})")


@dataclass(frozen=True)
class SgmState:
    """Markov-chain state (x, d) of SGM plus its parameters and step count."""

    x: np.ndarray
    d: np.ndarray
    alpha: float
    beta: float
    k: int = 0

    def __post_init__(self):
        if not self.alpha > 0 or not math.isfinite(self.alpha):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError(f"beta must lie in [0, 1), got {self.beta}")
        if self.x.shape != self.d.shape:
            raise ValueError(f"x and d shapes differ: {self.x.shape} vs {self.d.shape}")
        if self.k < 0:
            raise ValueError("iteration count must be nonnegative")

    @classmethod
    def initial(cls, x0, alpha: float, beta: float) -> "SgmState":
        """Fresh state with zero direction, as the recursion requires."""
        x = as_param_vector(x0)
        return cls(x=x, d=np.zeros_like(x), alpha=float(alpha), beta=float(beta), k=0)

    @property
    def dim(self) -> int:
        return self.x.shape[0]

    def with_alpha(self, alpha: float) -> "SgmState":
        return replace(self, alpha=float(alpha))


def _check_gradient(state: SgmState, g) -> np.ndarray:
    g = np.asarray(g, dtype=np.float64)
    if g.shape != state.x.shape:
        raise ValueError(f"gradient shape {g.shape} does not match parameters {state.x.shape}")
    _require_finite(g, "g")
    return g


def sgm_step(state: SgmState, g) -> SgmState:
    """One normalized SGM step. ``g`` is read, never stored or modified."""
    g = _check_gradient(state, g)
    beta = state.beta
    d_new = (1.0 - beta) * g + beta * state.d
    x_new = state.x - state.alpha * d_new
    return SgmState(x=x_new, d=d_new, alpha=state.alpha, beta=beta, k=state.k + 1)


def sgm_step_common(state: SgmState, g, alpha_prime: float) -> SgmState:
    """One step of the common form ``d = g + beta d; x -= alpha' d``.

    ``state.alpha`` is carried along unchanged; only ``alpha_prime`` moves x.
    """
    g = _check_gradient(state, g)
    if not alpha_prime > 0:
        raise ValueError(f"alpha_prime must be positive, got {alpha_prime}")
    d_new = g + state.beta * state.d
    x_new = state.x - alpha_prime * d_new
    return SgmState(x=x_new, d=d_new, alpha=state.alpha, beta=state.beta, k=state.k + 1)


@dataclass(frozen=True)
class Constant:
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("Constant: alpha must be positive")


@dataclass(frozen=True)
class Poly:
    """alpha_k = a / (k + b)^c."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("Poly: a and b must be positive")
        # c = 1/2 admitted: it is the customary SGM-poly baseline setting
        if not 0.5 <= self.c <= 1.0:
            raise ValueError(f"Poly: c must lie in [1/2, 1], got {self.c}")


@dataclass(frozen=True)
class ConstantAndCut:
    """alpha0 held fixed, multiplied by zeta every `every` iterations."""

    alpha0: float
    zeta: float
    every: int

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise ValueError("ConstantAndCut: alpha0 must be positive")
        if not 0.0 < self.zeta < 1.0:
            raise ValueError(f"ConstantAndCut: zeta must lie in (0, 1), got {self.zeta}")
        if self.every < 1:
            raise ValueError("ConstantAndCut: cut period must be >= 1")


StepSizeRule = Union[Constant, Poly, ConstantAndCut]


def step_size_at(rule: StepSizeRule, k: int) -> float:
    """Learning rate to use at iteration ``k`` (0-based)."""
    if k < 0:
        raise ValueError("iteration must be nonnegative")
    if isinstance(rule, Constant):
        return rule.alpha
    if isinstance(rule, Poly):
        return rule.a / (k + rule.b) ** rule.c
    if isinstance(rule, ConstantAndCut):
        # cut takes effect at the start of iteration k = every, 2*every, ...
        return rule.alpha0 * rule.zeta ** (k // rule.every)
    raise TypeError(f"unknown step-size rule {rule!r}")
