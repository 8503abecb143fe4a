"""Quick self-check of the estimators and the t quantile against hand values."""

from __future__ import annotations

import math

import numpy as np

from sasa.inference import t_quantile, test_deterministic, test_markov, var_batch_means, var_iid, var_olbm

_CHECKS = []


def _check(name):
    def deco(fn):
        _CHECKS.append((name, fn))
        return fn
    return deco


@_check("var_iid([0, 2]) = 2")
def _iid_pair():
    return var_iid([0.0, 2.0]).sigma2_hat == 2.0


@_check("var_iid([1, 2, 3, 4]) = 5/3")
def _iid_four():
    return math.isclose(var_iid([1, 2, 3, 4]).sigma2_hat, 5 / 3, rel_tol=1e-14)


@_check("var_batch_means([1, 2, 3, 4], 2, 2) = 4")
def _bm():
    return math.isclose(var_batch_means([1, 2, 3, 4], 2, 2).sigma2_hat, 4.0, rel_tol=1e-14)


@_check("var_olbm([1, 2, 3, 4], 2) = 8/3")
def _olbm():
    return math.isclose(var_olbm([1, 2, 3, 4], 2).sigma2_hat, 8 / 3, rel_tol=1e-14)


@_check("var_batch_means(s, N, 1) = var_iid(s)")
def _reduction():
    rng = np.random.default_rng(0)
    for _ in range(20):
        s = rng.standard_normal(50)
        if not math.isclose(var_batch_means(s, s.size, 1).sigma2_hat, var_iid(s).sigma2_hat, rel_tol=1e-12):
            return False
    return True


@_check("t quantiles 12.7062, 1.3722, 0")
def _quantiles():
    return (abs(t_quantile(0.975, 1) - 12.7062) < 1e-3 and abs(t_quantile(0.9, 10) - 1.3722) < 1e-3
            and t_quantile(0.5, 7) == 0.0)


@_check("gamma = 1 reduces to the ratio test")
def _gamma_one():
    rng = np.random.default_rng(1)
    z, v = rng.normal(0.0, 0.1, 400), np.ones(400)
    return test_markov(z, v, 0.02, 1.0).drop == test_deterministic(z.mean(), 1.0, 0.02)


def run_selftest(emit=print) -> int:
    """Run every check, emit one line each, return the number of failures."""
    failures = 0
    for name, fn in _CHECKS:
        ok = bool(fn())
        failures += not ok
        emit(f"{'PASS' if ok else 'FAIL'}  {name}")
    return failures
