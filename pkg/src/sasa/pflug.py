"""Generalized Pflug stationarity condition, as a diagnostic only.

On a quadratic with additive noise and small alpha, stationary SGM
satisfies approximately

    E<g, d> = -(1-beta)/(2(1+beta)) * E<r, g~>

where r = (g1 - g2)/2 is half the difference of two gradients drawn at
x, and g~ is a third gradient drawn at x + alpha*r, so that
E<r, g~> = (alpha/2) tr(A Sigma).  Stepping with the average (g1+g2)/2
halves the noise, which is where the factor 2 in the denominator comes
from; stepping with g1 alone doubles the coefficient.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from sasa.sgm import SgmState, sgm_step
from sasa.stationarity import HalfQueue, collect

REL_FLOOR = 1e-12


class PflugSample(NamedTuple):
    gd: float  # <g, d_k>
    rg: float  # <r, g~>


class PflugResidual(NamedTuple):
    lhs_mean: float
    rhs_mean: float
    relative_error: float


def pflug_sample(oracle, state: SgmState, averaged: bool = True) -> tuple[np.ndarray, PflugSample]:
    """Draw the three gradients for one iteration.

    Returns the gradient to step with and the pair (<g, d_k>, <r, g~>).
    """
    x = state.x
    g1 = oracle.stochastic_grad(x)
    g2 = oracle.stochastic_grad(x)
    r = 0.5 * (g1 - g2)
    g_tilde = oracle.stochastic_grad(x + state.alpha * r)
    g = 0.5 * (g1 + g2) if averaged else g1
    return g, PflugSample(gd=float(g @ state.d), rg=float(r @ g_tilde))


def rhs_coefficient(beta: float, averaged: bool = True) -> float:
    coef = (1.0 - beta) / (1.0 + beta)
    return -0.5 * coef if averaged else -coef


def _relative_error(lhs: float, rhs: float) -> float:
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), REL_FLOOR)


def pflug_residual(samples, alpha: float, beta: float, averaged: bool = True) -> PflugResidual:
    """Compare both sides of the condition over ``samples``.

    ``samples`` is a sequence of PflugSample or an (N, 2) array of
    (gd, rg) rows.  ``alpha`` is accepted for symmetry with the other
    diagnostics; the ratio form of the condition does not depend on it.
    """
    arr = np.asarray(samples, dtype=np.float64).reshape(-1, 2)
    if arr.shape[0] == 0:
        raise ValueError("pflug_residual needs at least one sample")
    lhs = float(arr[:, 0].mean())
    rhs = rhs_coefficient(beta, averaged) * float(arr[:, 1].mean())
    return PflugResidual(lhs, rhs, _relative_error(lhs, rhs))


class ConditionRow(NamedTuple):
    iter: int
    yaida_ratio: float
    pflug_relative_error: float
    zbar: float
    vbar: float
    pflug_lhs: float
    pflug_rhs: float


def compare_conditions(problem, alpha: float, beta: float, horizon: int, seed: int | None = None,
                       n_checkpoints: int = 20, averaged: bool = True, x0=None) -> list[ConditionRow]:
    """Run fixed-step SGM with Pflug sampling and track both conditions.

    Both sides of each condition are averaged over the latest half of the
    run so far (HalfQueue burn-in).  Rows are emitted at ``n_checkpoints``
    evenly spaced iterations, the last one at ``horizon``.
    """
    if horizon <= 0:
        return []
    oracle = problem if seed is None else problem.reseeded(seed)
    state = SgmState.initial(oracle.initial_point() if x0 is None else x0, alpha, beta)
    zq, vq, gdq, rgq = HalfQueue(), HalfQueue(), HalfQueue(), HalfQueue()
    checkpoints = set(np.linspace(horizon / n_checkpoints, horizon, n_checkpoints).astype(int))
    coef = rhs_coefficient(beta, averaged)
    rows = []
    for k in range(1, horizon + 1):
        g, sample = pflug_sample(oracle, state, averaged)
        new = sgm_step(state, g)
        z, v = collect(state, g, new.d)
        zq.push(z)
        vq.push(v)
        gdq.push(sample.gd)
        rgq.push(sample.rg)
        state = new
        if k in checkpoints:
            zbar, vbar = zq.mean(), vq.mean()
            lhs, rhs = gdq.mean(), coef * rgq.mean()
            ratio = abs(zbar) / vbar if vbar > 0 else math.inf
            rows.append(ConditionRow(k, ratio, _relative_error(lhs, rhs), zbar, vbar, lhs, rhs))
    return rows
