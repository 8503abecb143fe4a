"""Stationarity tests on collected (z, v) samples.

Three decisions are provided: the plain ratio test ``|zbar| < delta*vbar``,
and two equivalence tests that additionally require the whole
(1 - gamma) confidence interval of zbar to sit inside
``(-delta*vbar, delta*vbar)``.  The equivalence tests differ only in how
the variance of zbar is estimated: i.i.d. sample variance, batch means,
or overlapping batch means.  The i.i.d. estimator ignores
autocorrelation and is kept for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from sasa.errors import InsufficientSamples

ESTIMATORS = ("iid", "bm", "olbm")


@dataclass(frozen=True)
class VarianceEstimate:
    sigma2_hat: float
    dof: int
    method: str


def _as_samples(samples) -> np.ndarray:
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    return arr


def _is_constant(values: np.ndarray) -> bool:
    return values.size == 0 or bool((values == values[0]).all())


def _centered_ss(values: np.ndarray) -> float:
    # rounding in the mean would otherwise leave ~1e-30 on constant input
    if _is_constant(values):
        return 0.0
    return float(np.sum((values - values.mean()) ** 2))


def var_iid(samples) -> VarianceEstimate:
    """Unbiased sample variance with N - 1 degrees of freedom."""
    z = _as_samples(samples)
    n = z.size
    if n < 2:
        raise InsufficientSamples(f"i.i.d. variance needs N >= 2, got {n}")
    return VarianceEstimate(_centered_ss(z) / (n - 1), n - 1, "iid")


def var_batch_means(samples, b: int, m: int) -> VarianceEstimate:
    """Batch-means estimate of the asymptotic variance of the sample mean.

    Uses the newest ``b*m`` samples split into ``b`` consecutive batches
    of length ``m``; older surplus samples are ignored.  Returns
    ``m/(b-1) * sum_j (batch_mean_j - mean)^2`` with b - 1 degrees of
    freedom.
    """
    z = _as_samples(samples)
    if b < 2 or m < 1:
        raise InsufficientSamples(f"batch means needs b >= 2 and m >= 1, got b={b}, m={m}")
    if b * m > z.size:
        raise InsufficientSamples(f"b*m = {b * m} exceeds the {z.size} available samples")
    batch = z[z.size - b * m:].reshape(b, m).mean(axis=1)
    return VarianceEstimate(m * _centered_ss(batch) / (b - 1), b - 1, "bm")


def var_olbm(samples, b: int) -> VarianceEstimate:
    """Overlapping batch means with N - b + 1 windows of length b.

    Scaled as in Flegal & Jones (2010): ``N b / ((N-b)(N-b+1))`` times the
    squared deviations of window means from the overall mean; N - b
    degrees of freedom.
    """
    z = _as_samples(samples)
    n = z.size
    if not 2 <= b <= n - 1:
        raise InsufficientSamples(f"OLBM needs 2 <= b <= N-1, got b={b}, N={n}")
    if _is_constant(z):
        return VarianceEstimate(0.0, n - b, "olbm")
    windows = np.convolve(z, np.full(b, 1.0 / b), mode="valid")
    ss = float(np.sum((windows - z.mean()) ** 2))
    return VarianceEstimate(n * b * ss / ((n - b) * (n - b + 1)), n - b, "olbm")


# --- Student t quantile --------------------------------------------------

_FPMIN = 1e-300
_CF_EPS = 1e-16
_CF_MAXIT = 20000


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _FPMIN else _FPMIN)
    h = d
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _FPMIN else _FPMIN)
        c = 1.0 + aa / c
        c = c if abs(c) > _FPMIN else _FPMIN
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _FPMIN else _FPMIN)
        c = 1.0 + aa / c
        c = c if abs(c) > _FPMIN else _FPMIN
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc_reg(a: float, b: float, x: float, y: float | None = None) -> float:
    """Regularized incomplete beta I_x(a, b).

    ``y`` may carry 1 - x computed without cancellation.
    """
    if y is None:
        y = 1.0 - x
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log(y))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, y) / b


def t_sf(t: float, dof: float) -> float:
    """Upper tail P(T > t) of Student's t."""
    if t < 0:
        return 1.0 - t_sf(-t, dof)
    t2 = t * t
    return 0.5 * betainc_reg(0.5 * dof, 0.5, dof / (dof + t2), t2 / (dof + t2))


def t_cdf(t: float, dof: float) -> float:
    return 1.0 - t_sf(t, dof)


def t_pdf(t: float, dof: float) -> float:
    log_norm = math.lgamma(0.5 * (dof + 1)) - math.lgamma(0.5 * dof) - 0.5 * math.log(dof * math.pi)
    return math.exp(log_norm - 0.5 * (dof + 1) * math.log1p(t * t / dof))


def _upper_quantile(q: float, dof: float) -> float:
    """t > 0 with P(T > t) = q, for 0 < q < 1/2."""
    lo, hi = 0.0, 1.0
    while t_sf(hi, dof) > q:
        lo, hi = hi, 2.0 * hi
    t = 0.5 * (lo + hi)
    for _ in range(300):
        f = t_sf(t, dof) - q
        if f > 0:
            lo = t
        else:
            hi = t
        pdf = t_pdf(t, dof)
        t_new = t + f / pdf if pdf > 0 else math.inf
        if not lo < t_new < hi:
            t_new = 0.5 * (lo + hi)
        if abs(t_new - t) <= 1e-15 * max(1.0, t) or hi - lo <= 1e-15 * max(1.0, hi):
            return t_new
        t = t_new
    return t


def t_quantile(p: float, dof: float) -> float:
    """Inverse CDF of Student's t by safeguarded Newton on the tail probability."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if not dof >= 1:
        raise ValueError(f"degrees of freedom must be >= 1, got {dof}")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -_upper_quantile(p, dof)
    return _upper_quantile(1.0 - p, dof)


# --- tests ------------------------------------------------------------------


@dataclass(frozen=True)
class TestReport:
    """Outcome of one stationarity test over the retained sample window."""

    zbar: float
    vbar: float
    n: int
    sigma: VarianceEstimate | None
    t_star: float
    lci: float
    uci: float
    delta: float
    gamma: float
    drop: bool
    insufficient: bool = False

    __test__ = False  # not a pytest class

    @property
    def sigma_hat(self) -> float:
        return math.sqrt(self.sigma.sigma2_hat) if self.sigma is not None else 0.0


def interval_inside(lci: float, uci: float, delta: float, vbar: float) -> bool:
    """Whether [lci, uci] lies strictly inside (-delta*vbar, delta*vbar)."""
    bound = delta * vbar
    return lci > -bound and uci < bound


def test_deterministic(zbar: float, vbar: float, delta: float) -> bool:
    """Plain relative ratio test |zbar| < delta * vbar."""
    return abs(zbar) < delta * vbar


def _window_mean(q) -> float:
    if hasattr(q, "mean") and not isinstance(q, np.ndarray):
        return float(q.mean())
    return float(np.mean(q))


def _insufficient(zbar, vbar, n, delta, gamma) -> TestReport:
    nan = math.nan
    return TestReport(zbar, vbar, n, None, nan, nan, nan, delta, gamma, False, True)


def estimate_variance(z: np.ndarray, estimator: str) -> VarianceEstimate:
    """Variance of the retained window with batch size floor(sqrt(N))."""
    n = z.size
    if estimator == "iid":
        return var_iid(z)
    b = math.isqrt(n)
    if estimator == "bm":
        return var_batch_means(z, b, b)
    if estimator == "olbm":
        return var_olbm(z, b)
    raise ValueError(f"unknown estimator {estimator!r}; expected one of {ESTIMATORS}")


def test_markov(zq, vq, delta: float, gamma: float, estimator: str = "bm") -> TestReport:
    """Equivalence test of zbar against (-delta*vbar, delta*vbar).

    ``zq`` and ``vq`` are HalfQueues or 1-D arrays of the same length.
    Too few samples yield ``drop=False`` with ``insufficient=True``.
    """
    if estimator not in ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator!r}; expected one of {ESTIMATORS}")
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    n = len(zq)
    if n != len(vq):
        raise ValueError(f"queue lengths differ: {n} vs {len(vq)}")
    if n == 0:
        return _insufficient(math.nan, math.nan, 0, delta, gamma)
    zbar, vbar = _window_mean(zq), _window_mean(vq)
    try:
        sigma = estimate_variance(np.asarray(zq, dtype=np.float64), estimator)
    except InsufficientSamples:
        return _insufficient(zbar, vbar, n, delta, gamma)

    t_star = t_quantile(1.0 - 0.5 * gamma, sigma.dof)
    half = t_star * math.sqrt(sigma.sigma2_hat) / math.sqrt(n)
    lci, uci = zbar - half, zbar + half
    return TestReport(zbar, vbar, n, sigma, t_star, lci, uci, delta, gamma,
                      interval_inside(lci, uci, delta, vbar))


def test_iid(zq, vq, delta: float, gamma: float) -> TestReport:
    return test_markov(zq, vq, delta, gamma, estimator="iid")


def deterministic_report(zq, vq, delta: float) -> TestReport:
    """Ratio test packaged as a zero-width TestReport."""
    n = len(zq)
    if n == 0 or n != len(vq):
        if n != len(vq):
            raise ValueError(f"queue lengths differ: {n} vs {len(vq)}")
        return _insufficient(math.nan, math.nan, 0, delta, 1.0)
    zbar, vbar = _window_mean(zq), _window_mean(vq)
    return TestReport(zbar, vbar, n, None, 0.0, zbar, zbar, delta, 1.0,
                      test_deterministic(zbar, vbar, delta))


for _fn in (test_deterministic, test_markov, test_iid):
    _fn.__test__ = False  # library functions, not pytest tests
