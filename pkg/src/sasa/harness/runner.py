"""SASA outer loop and the baseline optimizers it is compared against."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Callable, NamedTuple

import numpy as np

from sasa import inference
from sasa.errors import NumericalError
from sasa.sgm import Constant, ConstantAndCut, Poly, SgmState, sgm_step, step_size_at
from sasa.stationarity import HalfQueue, collect, pair_statistics, reset_all

TESTS = ("det", "iid", "markov")
OPTIMIZERS = ("sasa", "sgm-const", "sgm-poly", "sgm-hand", "adam")


@dataclass(frozen=True)
class SasaConfig:
    alpha0: float = 1.0
    beta: float = 0.9
    delta: float = 0.02
    gamma: float = 0.2
    zeta: float = 0.1
    period: int = 1000
    estimator: str = "bm"
    test: str = "markov"
    max_iterations: int = 100_000
    seed: int = 0
    pairing: str = "next"
    loss_every: int = 100

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be positive")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError("beta must lie in [0, 1)")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if not 0.0 < self.zeta < 1.0:
            raise ValueError("zeta must lie in (0, 1)")
        if self.period < 1:
            raise ValueError("test period M must be >= 1")
        if self.estimator not in inference.ESTIMATORS:
            raise ValueError(f"estimator must be one of {inference.ESTIMATORS}")
        if self.test not in TESTS:
            raise ValueError(f"test must be one of {TESTS}")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be nonnegative")
        if self.pairing not in ("next", "current"):
            raise ValueError("pairing must be 'next' or 'current'")
        if self.loss_every < 1:
            raise ValueError("loss_every must be >= 1")

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


@dataclass(frozen=True)
class AdamConfig:
    alpha0: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise ValueError("Adam alpha0 must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("Adam betas must lie in [0, 1)")
        if not self.epsilon > 0:
            raise ValueError("Adam epsilon must be positive")


class TraceRow(NamedTuple):
    iter: int
    loss: float
    alpha: float
    n_samples: int
    zbar: float
    vbar: float
    sigma_hat: float
    lci: float
    uci: float
    dropped: bool


TRACE_COLUMNS = TraceRow._fields


@dataclass
class RunTrace:
    rows: list[TraceRow] = field(default_factory=list)
    drop_iters: list[int] = field(default_factory=list)
    final_loss: float = math.nan
    seed: int = 0
    label: str = ""
    x_final: np.ndarray | None = None

    @property
    def alphas(self) -> list[float]:
        return [r.alpha for r in self.rows]

    @property
    def test_rows(self) -> list[TraceRow]:
        return [r for r in self.rows if not math.isnan(r.lci) or r.dropped]

    @property
    def first_drop(self) -> int | None:
        return self.drop_iters[0] if self.drop_iters else None


class RunAborted(RuntimeError):
    """A run stopped early; ``trace`` holds everything recorded so far."""

    def __init__(self, message: str, trace: RunTrace):
        super().__init__(message)
        self.trace = trace


def _test_row(k, loss, alpha, report) -> TraceRow:
    sigma_hat = math.nan if report.insufficient else report.sigma_hat
    return TraceRow(k, loss, alpha, report.n, report.zbar, report.vbar, sigma_hat,
                    report.lci, report.uci, report.drop)


def _loss_row(k, loss, alpha, zq, vq) -> TraceRow:
    n = len(zq)
    zbar, vbar = (zq.mean(), vq.mean()) if n else (math.nan, math.nan)
    nan = math.nan
    return TraceRow(k, loss, alpha, n, zbar, vbar, nan, nan, nan, False)


def _run_test(zq, vq, cfg: SasaConfig):
    if cfg.test == "det":
        return inference.deterministic_report(zq, vq, cfg.delta)
    estimator = "iid" if cfg.test == "iid" else cfg.estimator
    return inference.test_markov(zq, vq, cfg.delta, cfg.gamma, estimator)


def _checked_loss(oracle, x) -> float:
    loss = oracle.loss(x)
    if not math.isfinite(loss):
        raise NumericalError(f"loss became non-finite ({loss})")
    return loss


def run_sasa(problem, cfg: SasaConfig, x0=None, label: str = "sasa",
             on_row: Callable[[TraceRow], None] | None = None) -> RunTrace:
    """SGM with a stationarity test every ``cfg.period`` steps.

    When the test fires the learning rate is multiplied by ``cfg.zeta``
    and both sample queues are emptied.  A final partial period is not
    tested.  Rows are recorded at every test and every ``loss_every``
    iterations.
    """
    oracle = problem.reseeded(cfg.seed)
    trace = RunTrace(seed=cfg.seed, label=label)

    def emit(row):
        trace.rows.append(row)
        if on_row is not None:
            on_row(row)

    state = SgmState.initial(oracle.initial_point() if x0 is None else x0, cfg.alpha0, cfg.beta)
    zq, vq = HalfQueue(), HalfQueue()
    try:
        for k in range(1, cfg.max_iterations + 1):
            g = oracle.stochastic_grad(state.x)
            new = sgm_step(state, g)
            z, v = collect(state, g, new.d, cfg.pairing)
            zq.push(z)
            vq.push(v)
            state = new
            if k % cfg.period == 0:
                report = _run_test(zq, vq, cfg)
                emit(_test_row(k, _checked_loss(oracle, state.x), state.alpha, report))
                if report.drop:
                    trace.drop_iters.append(k)
                    state = state.with_alpha(state.alpha * cfg.zeta)
                    reset_all(zq, vq)
            elif k % cfg.loss_every == 0:
                emit(_loss_row(k, _checked_loss(oracle, state.x), state.alpha, zq, vq))
    except Exception as exc:
        trace.x_final = state.x
        raise RunAborted(f"{label} aborted at iteration {state.k}: {exc}", trace) from exc
    trace.final_loss = _checked_loss(oracle, state.x)
    trace.x_final = state.x
    return trace


def sgm_schedule(optimizer: str, params: dict):
    """Step-size rule for an SGM baseline from its parameter dict."""
    if optimizer == "sgm-const":
        return Constant(params.get("alpha", params.get("alpha0", 1.0)))
    if optimizer == "sgm-poly":
        return Poly(params.get("a", 1.0), params.get("b", 1.0), params.get("c", 0.5))
    if optimizer == "sgm-hand":
        return ConstantAndCut(params.get("alpha0", 1.0), params.get("zeta", 0.1), int(params["every"]))
    raise ValueError(f"unknown SGM baseline {optimizer!r}")


def run_baseline(problem, optimizer: str, params: dict | None = None, max_iterations: int = 100_000,
                 period: int = 1000, seed: int = 0, delta: float = 0.02, gamma: float = 0.2,
                 estimator: str = "bm", loss_every: int = 100, x0=None,
                 on_row: Callable[[TraceRow], None] | None = None) -> RunTrace:
    """Run a fixed-schedule baseline with the SASA trace schema.

    Statistics are collected and tested every ``period`` steps but never
    acted on.  For Adam they use the first-moment estimate as the
    direction, beta1 as momentum and the base rate as alpha.
    """
    params = dict(params or {})
    if optimizer not in OPTIMIZERS[1:]:
        raise ValueError(f"unknown baseline {optimizer!r}; expected one of {OPTIMIZERS[1:]}")
    if period < 1 or loss_every < 1:
        raise ValueError("period and loss_every must be >= 1")
    oracle = problem.reseeded(seed)
    trace = RunTrace(seed=seed, label=optimizer)
    cfg_test = SasaConfig(delta=delta, gamma=gamma, estimator=estimator, period=period)

    def emit(row):
        trace.rows.append(row)
        if on_row is not None:
            on_row(row)

    x = np.array(oracle.initial_point() if x0 is None else x0, dtype=np.float64)
    zq, vq = HalfQueue(), HalfQueue()

    if optimizer == "adam":
        acfg = AdamConfig(**params)
        step = _adam_stepper(acfg, x.size)
        alpha_now, beta_stat = acfg.alpha0, acfg.beta1
    else:
        rule = sgm_schedule(optimizer, params)
        beta = float(params.get("beta", 0.9))
        state = SgmState.initial(x, step_size_at(rule, 0), beta)

    try:
        for k in range(1, max_iterations + 1):
            if optimizer == "adam":
                g = oracle.stochastic_grad(x)
                x_old = x
                x, m = step(x, g)
                z, v = pair_statistics(x_old, g, m, alpha_now, beta_stat)
            else:
                alpha_now = step_size_at(rule, k - 1)
                if alpha_now != state.alpha:
                    state = state.with_alpha(alpha_now)
                g = oracle.stochastic_grad(state.x)
                new = sgm_step(state, g)
                z, v = collect(state, g, new.d)
                state = new
                x = state.x
            zq.push(z)
            vq.push(v)
            if k % period == 0:
                report = _run_test(zq, vq, cfg_test)
                emit(_test_row(k, _checked_loss(oracle, x), alpha_now, report)._replace(dropped=False))
            elif k % loss_every == 0:
                emit(_loss_row(k, _checked_loss(oracle, x), alpha_now, zq, vq))
    except Exception as exc:
        trace.x_final = x
        raise RunAborted(f"{optimizer} aborted at iteration {k}: {exc}", trace) from exc
    trace.final_loss = _checked_loss(oracle, x)
    trace.x_final = x
    return trace


def _adam_stepper(cfg: AdamConfig, n: int):
    m = np.zeros(n)
    v = np.zeros(n)
    t = 0

    def step(x, g):
        nonlocal m, v, t
        g = np.asarray(g, dtype=np.float64)
        if not np.isfinite(g).all():
            idx = int(np.flatnonzero(~np.isfinite(g))[0])
            raise NumericalError(f"g[{idx}] is not finite ({g[idx]!r})")
        t += 1
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g
        m_hat = m / (1.0 - cfg.beta1 ** t)
        v_hat = v / (1.0 - cfg.beta2 ** t)
        return x - cfg.alpha0 * m_hat / (np.sqrt(v_hat) + cfg.epsilon), m

    return step
