"""Replicated-seed comparisons and one-axis sensitivity sweeps."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from sasa.harness.runner import RunTrace, SasaConfig, run_sasa

SWEEP_AXES = ("delta", "gamma", "zeta")
VARIANCE_TESTS = ("det", "markov", "iid")


@dataclass
class VarianceResult:
    """First-drop statistics of one test across seeds.

    A seed that never drops within ``max_iterations`` is censored: its
    first drop is recorded as ``max_iterations`` and ``censored`` counts it.
    """

    test: str
    seeds: list[int]
    drop_iters: list[list[int]]
    first_drops: list[int]
    std_first_drop: float
    degenerate: bool
    censored: int
    traces: list[RunTrace]

    @property
    def mean_first_drop(self) -> float:
        return float(np.mean(self.first_drops))


def _run_one(args) -> RunTrace:
    problem, cfg, label = args
    return run_sasa(problem, cfg, label=label)


def _run_many(jobs, workers: int | None) -> list[RunTrace]:
    if workers is None or workers <= 1 or len(jobs) <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs))


def run_variance_experiment(problem, test: str, period: int, delta: float, gamma: float,
                            seeds, base: SasaConfig | None = None,
                            workers: int | None = None) -> VarianceResult:
    """Run SASA with a fixed test period once per seed and summarize drops.

    With fewer than two seeds the standard deviation is reported as 0 and
    ``degenerate`` is set.
    """
    if test not in VARIANCE_TESTS:
        raise ValueError(f"test must be one of {VARIANCE_TESTS}")
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ValueError("need at least one seed")
    base = base or SasaConfig()
    cfgs = [replace(base, test=test, period=period, delta=delta, gamma=gamma, seed=s) for s in seeds]
    traces = _run_many([(problem, c, f"{test}-seed{c.seed}") for c in cfgs], workers)
    horizon = base.max_iterations
    first = [t.first_drop if t.first_drop is not None else horizon for t in traces]
    censored = sum(t.first_drop is None for t in traces)
    degenerate = len(seeds) < 2
    std = 0.0 if degenerate else float(np.std(first, ddof=1))
    return VarianceResult(test, seeds, [list(t.drop_iters) for t in traces], first, std,
                          degenerate, censored, traces)


def run_sweep(problem, base: SasaConfig, axis: str, values,
              workers: int | None = None) -> list[tuple[float, RunTrace]]:
    """One SASA run per value of ``axis``, all sharing ``base.seed``.

    Every value is validated before the first run starts.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {SWEEP_AXES}")
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    cfgs = [replace(base, **{axis: float(v)}) for v in values]  # raises on invalid values
    traces = _run_many([(problem, c, f"{axis}={getattr(c, axis):g}") for c in cfgs], workers)
    return [(getattr(c, axis), t) for c, t in zip(cfgs, traces)]
