"""Gradient oracles with Markovian, unbiased stochastic gradients.

Every oracle owns a private ``numpy.random.Generator`` built from its
``seed``; ``reseeded(seed)`` returns an independent copy sharing the
problem data, which is how the harness isolates replicate runs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np


@runtime_checkable
class GradientOracle(Protocol):
    dim: int

    def stochastic_grad(self, x: np.ndarray) -> np.ndarray: ...

    def full_gradient(self, x: np.ndarray) -> np.ndarray: ...

    def loss(self, x: np.ndarray) -> float: ...

    def initial_point(self) -> np.ndarray: ...

    def reseeded(self, seed: int) -> "GradientOracle": ...


def _check_dim(x: np.ndarray, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (n,):
        raise ValueError(f"expected a vector of dimension {n}, got shape {x.shape}")
    return x


@dataclass(eq=False)
class QuadraticProblem:
    """F(x) = x'Ax / 2 with additive noise g = Ax + xi, xi ~ N(0, diag(noise_var)).

    ``a`` is either a 1-D spectrum (A diagonal) or a dense symmetric
    positive-definite matrix.
    """

    a: np.ndarray
    noise_var: np.ndarray
    seed: int = 0
    x0: np.ndarray | None = None
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64)
        if a.ndim == 1:
            eigs = a
        elif a.ndim == 2 and a.shape[0] == a.shape[1]:
            if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
                raise ValueError("A must be symmetric")
            eigs = np.linalg.eigvalsh(a)
        else:
            raise ValueError(f"A must be a spectrum or a square matrix, got shape {a.shape}")
        if eigs.size == 0 or not np.all(eigs > 0):
            raise ValueError("A must be positive definite")
        self.a = a
        self.dim = a.shape[0]
        self.L = float(eigs.max())
        self._eigs = eigs

        var = np.broadcast_to(np.asarray(self.noise_var, dtype=np.float64), (self.dim,)).copy()
        if np.any(var < 0) or not np.all(np.isfinite(var)):
            raise ValueError("noise variances must be finite and nonnegative")
        self.noise_var = var
        self._noise_std = np.sqrt(var)
        self._noiseless = not np.any(var > 0)
        if self.x0 is not None:
            self.x0 = _check_dim(self.x0, self.dim).copy()
        self.rng = np.random.default_rng(self.seed)

    def _matvec(self, x: np.ndarray) -> np.ndarray:
        return self.a * x if self.a.ndim == 1 else self.a @ x

    def full_gradient(self, x) -> np.ndarray:
        return self._matvec(_check_dim(x, self.dim))

    def stochastic_grad(self, x) -> np.ndarray:
        g = self.full_gradient(x)
        if self._noiseless:
            return g
        return g + self._noise_std * self.rng.standard_normal(self.dim)

    def sample_grads(self, x, n: int) -> np.ndarray:
        """``n`` independent stochastic gradients at the same point, shape (n, dim)."""
        g = self.full_gradient(x)
        if self._noiseless:
            return np.tile(g, (n, 1))
        return g + self._noise_std * self.rng.standard_normal((n, self.dim))

    def loss(self, x) -> float:
        x = _check_dim(x, self.dim)
        return 0.5 * float(x @ self._matvec(x))

    def trace_a_sigma(self) -> float:
        """tr(A Sigma_xi) for the diagonal noise covariance."""
        diag = self.a if self.a.ndim == 1 else np.diag(self.a)
        return float(diag @ self.noise_var)

    def initial_point(self) -> np.ndarray:
        return np.ones(self.dim) if self.x0 is None else self.x0.copy()

    def reseeded(self, seed: int) -> "QuadraticProblem":
        return replace(self, seed=seed)


def noisy_quadratic(n: int = 100, lo: float = 0.1, hi: float = 1.0, noise_var: float = 1.0,
                    seed: int = 0, x0=None) -> QuadraticProblem:
    """Diagonal quadratic with spectrum evenly spaced on [lo, hi]."""
    return QuadraticProblem(a=np.linspace(lo, hi, n), noise_var=noise_var, seed=seed, x0=x0)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Binary classification data: features (N, dim) and labels in {0, 1}."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.features.ndim != 2 or self.labels.shape != (self.features.shape[0],):
            raise ValueError("features must be (N, dim) and labels (N,)")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def to_csv(self, path) -> None:
        """One row per sample: label, then features."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for y, f in zip(self.labels, self.features):
                writer.writerow([int(y)] + [repr(float(v)) for v in f])

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        rows = np.loadtxt(Path(path), delimiter=",", ndmin=2)
        return cls(features=rows[:, 1:].copy(), labels=rows[:, 0].copy())


def synth_logreg_data(n_samples: int, dim: int, separation: float, seed: int) -> Dataset:
    """Two unit-variance Gaussian clusters centred at +/- (separation/2) u.

    ``u`` is a random unit vector; label 1 marks the +u cluster.
    """
    if n_samples < 2 or dim < 1 or separation < 0:
        raise ValueError("need n_samples >= 2, dim >= 1, separation >= 0")
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(dim)
    u /= np.linalg.norm(u)
    labels = rng.integers(0, 2, size=n_samples).astype(np.float64)
    noise = rng.standard_normal((n_samples, dim))
    features = noise + np.outer(2.0 * labels - 1.0, 0.5 * separation * u)
    return Dataset(features=features, labels=labels)


def _sigmoid(u):
    # tanh form avoids overflow for large |u|
    return 0.5 * (1.0 + np.tanh(0.5 * u))


@dataclass(eq=False)
class LogRegProblem:
    """L2-regularized logistic regression with i.i.d. minibatches.

    Minibatch indices are drawn uniformly with replacement, so successive
    gradients are independent given the current point.
    """

    data: Dataset
    weight_decay: float = 5e-4
    batch_size: int = 1
    seed: int = 0
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.data) == 0:
            raise ValueError("dataset is empty")
        if self.weight_decay < 0:
            raise ValueError("weight decay must be nonnegative")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        self.dim = self.data.dim
        self._f = np.ascontiguousarray(self.data.features, dtype=np.float64)
        self._y = np.asarray(self.data.labels, dtype=np.float64)
        self.rng = np.random.default_rng(self.seed)

    def _data_grad(self, x, f, y):
        resid = _sigmoid(f @ x) - y
        return resid @ f / f.shape[0]

    def stochastic_grad(self, x) -> np.ndarray:
        x = _check_dim(x, self.dim)
        idx = self.rng.integers(0, self._f.shape[0], size=self.batch_size)
        return self._data_grad(x, self._f[idx], self._y[idx]) + self.weight_decay * x

    def sample_grads(self, x, n: int, chunk: int = 8192) -> np.ndarray:
        x = _check_dim(x, self.dim)
        out = np.empty((n, self.dim))
        for start in range(0, n, chunk):
            m = min(chunk, n - start)
            idx = self.rng.integers(0, self._f.shape[0], size=(m, self.batch_size))
            f = self._f[idx]
            resid = _sigmoid(f @ x) - self._y[idx]
            out[start:start + m] = np.einsum("nb,nbd->nd", resid, f) / self.batch_size
        return out + self.weight_decay * x

    def full_gradient(self, x) -> np.ndarray:
        x = _check_dim(x, self.dim)
        return self._data_grad(x, self._f, self._y) + self.weight_decay * x

    def loss(self, x) -> float:
        x = _check_dim(x, self.dim)
        u = self._f @ x
        data = np.mean(np.logaddexp(0.0, u) - self._y * u)
        return float(data + 0.5 * self.weight_decay * (x @ x))

    def accuracy(self, x) -> float:
        x = _check_dim(x, self.dim)
        return float(np.mean((self._f @ x > 0) == (self._y > 0.5)))

    def initial_point(self) -> np.ndarray:
        return np.zeros(self.dim)

    @property
    def epoch_iters(self) -> int:
        return -(-len(self.data) // self.batch_size)

    def reseeded(self, seed: int) -> "LogRegProblem":
        return replace(self, seed=seed)


def default_logreg(batch_size: int = 1, weight_decay: float = 5e-4, n_samples: int = 1000,
                   dim: int = 20, separation: float = 2.0, data_seed: int = 0, seed: int = 0) -> LogRegProblem:
    """The synthetic logistic-regression benchmark used by the harness."""
    data = synth_logreg_data(n_samples, dim, separation, data_seed)
    return LogRegProblem(data, weight_decay=weight_decay, batch_size=batch_size, seed=seed)


@dataclass(eq=False)
class WeightDecay:
    """Adds ``lam/2 |x|^2`` to any oracle's loss and ``lam x`` to its gradients."""

    inner: GradientOracle
    lam: float

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("weight decay must be nonnegative")
        self.dim = self.inner.dim

    def stochastic_grad(self, x) -> np.ndarray:
        x = _check_dim(x, self.dim)
        return self.inner.stochastic_grad(x) + self.lam * x

    def sample_grads(self, x, n: int) -> np.ndarray:
        x = _check_dim(x, self.dim)
        if hasattr(self.inner, "sample_grads"):
            return self.inner.sample_grads(x, n) + self.lam * x
        return np.array([self.stochastic_grad(x) for _ in range(n)])

    def full_gradient(self, x) -> np.ndarray:
        x = _check_dim(x, self.dim)
        return self.inner.full_gradient(x) + self.lam * x

    def loss(self, x) -> float:
        x = _check_dim(x, self.dim)
        return float(self.inner.loss(x) + 0.5 * self.lam * (x @ x))

    def initial_point(self) -> np.ndarray:
        return self.inner.initial_point()

    def reseeded(self, seed: int) -> "WeightDecay":
        return WeightDecay(self.inner.reseeded(seed), self.lam)


def check_unbiasedness(oracle, x, n_draws: int) -> float:
    """Sup-norm distance between the mean of ``n_draws`` stochastic gradients and the true gradient."""
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    if hasattr(oracle, "sample_grads"):
        mean = oracle.sample_grads(x, n_draws).mean(axis=0)
    else:
        total = np.zeros(oracle.dim)
        for _ in range(n_draws):
            total += oracle.stochastic_grad(x)
        mean = total / n_draws
    return float(np.max(np.abs(mean - oracle.full_gradient(x))))
