"""Pearson correlation, PCA, and k-fold cross-validation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

EIGEN_ZERO = 1e-12


class UndefinedCorrelation(ValueError):
    pass


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("pearson needs two equal-length samples of size >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = np.sqrt(np.dot(dx, dx))
    sy = np.sqrt(np.dot(dy, dy))
    if sx == 0 or sy == 0:
        raise UndefinedCorrelation("correlation with a constant sample is undefined")
    return float(np.clip(np.dot(dx, dy) / (sx * sy), -1.0, 1.0))


def mse(predicted, truth) -> np.ndarray:
    """Per-dimension mean squared error over rows."""
    predicted = np.atleast_2d(np.asarray(predicted, dtype=float))
    truth = np.atleast_2d(np.asarray(truth, dtype=float))
    return ((predicted - truth) ** 2).mean(axis=0)


# --- PCA ----------------------------------------------------------------------


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray          # (n,)
    projection: np.ndarray    # (m, n), rows are unit eigenvectors
    eigenvalues: np.ndarray   # (m,), non-increasing
    total_variance: float

    @property
    def m(self) -> int:
        return self.projection.shape[0]

    @property
    def explained(self) -> np.ndarray:
        if self.total_variance == 0:
            return np.zeros_like(self.eigenvalues)
        return self.eigenvalues / self.total_variance


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each row so that its largest-magnitude entry is positive."""
    out = vectors.copy()
    for row in out:
        k = np.argmax(np.abs(row))
        if row[k] < 0:
            row *= -1
    return out


def symmetric_eigen(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (non-increasing) and sign-normalized eigenvectors as rows."""
    values, vectors = np.linalg.eigh(matrix)
    order = np.argsort(-values, kind="stable")
    return values[order], _fix_signs(vectors[:, order].T)


def covariance(vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and population covariance (1/|R| factor)."""
    x = np.asarray(vectors, dtype=float)
    mu = x.mean(axis=0)
    c = x - mu
    return mu, c.T @ c / x.shape[0]


def _complete_basis(rows: np.ndarray, n: int, count: int) -> np.ndarray:
    """Extend orthonormal ``rows`` with ``count`` further unit vectors (Gram-Schmidt on e_i)."""
    basis = list(rows)
    for i in range(n):
        if len(basis) >= rows.shape[0] + count:
            break
        v = np.zeros(n)
        v[i] = 1.0
        for b in basis:
            v -= np.dot(b, v) * b
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            basis.append(v / norm)
    return _fix_signs(np.array(basis[rows.shape[0]:]).reshape(-1, n))


def pca_fit(vectors, m: int) -> PcaModel:
    """Principal components of the rows of ``vectors``.

    With fewer rows than dimensions the eigenpairs come from the Gram matrix
    of the centred data; directions with zero variance are filled in with a
    deterministic orthonormal completion.
    """
    x = np.asarray(vectors, dtype=float)
    count, n = x.shape
    if count < 2:
        raise ValueError("PCA needs at least two vectors")
    if not 1 <= m <= min(n, count):
        raise ValueError(f"m={m} outside [1, {min(n, count)}]")
    mu = x.mean(axis=0)
    c = x - mu
    try:
        if count >= n:
            cov = c.T @ c / count
            values, rows = symmetric_eigen(cov)
            total = float(np.trace(cov))
            return PcaModel(mu, rows[:m], np.clip(values[:m], 0, None), total)

        gram = c @ c.T / count
        g_values, g_rows = symmetric_eigen(gram)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"eigendecomposition failed: {exc}") from exc
    total = float(np.trace(gram))
    scale = max(total, 1.0)
    keep = g_values > EIGEN_ZERO * scale
    rows = []
    for value, u in zip(g_values[keep], g_rows[keep]):
        v = c.T @ u
        rows.append(v / np.linalg.norm(v))
    rows = _fix_signs(np.array(rows).reshape(-1, n))
    values = list(np.clip(g_values[keep], 0, None))
    if len(rows) < m:
        extra = _complete_basis(rows, n, m - len(rows))
        rows = np.vstack([rows, extra])
        values += [0.0] * extra.shape[0]
    return PcaModel(mu, rows[:m], np.array(values[:m]), total)


def pca_project(model: PcaModel, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != model.mean.shape[0]:
        raise ValueError(f"expected dimension {model.mean.shape[0]}, got {p.shape[-1]}")
    return (p - model.mean) @ model.projection.T


def pca_backproject(model: PcaModel, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != model.m:
        raise ValueError(f"expected dimension {model.m}, got {r.shape[-1]}")
    return model.mean + r @ model.projection


def top_loadings(model: PcaModel, axis: int, labels: Sequence[str], k: int = 10):
    """Most positive and most negative coefficients of one axis, with their labels."""
    coef = model.projection[axis]
    order = np.argsort(-coef, kind="stable")
    top = [(labels[i], float(coef[i])) for i in order[:k]]
    bottom = [(labels[i], float(coef[i])) for i in order[::-1][:k]]
    return top, bottom


# --- cross-validation -----------------------------------------------------------


@dataclass(frozen=True)
class FoldPlan:
    k: int
    seed: int
    folds: tuple[tuple[int, ...], ...]  # subject positions per fold

    def assignment(self) -> list[int]:
        out = [0] * sum(len(f) for f in self.folds)
        for i, fold in enumerate(self.folds):
            for s in fold:
                out[s] = i
        return out


def kfold(subjects: int | Sequence, k: int, seed: int) -> FoldPlan:
    count = subjects if isinstance(subjects, int) else len(subjects)
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > count:
        raise ValueError(f"cannot split {count} subjects into {k} folds")
    perm = np.random.default_rng(seed).permutation(count)
    folds = tuple(tuple(sorted(int(i) for i in perm[j::k])) for j in range(k))
    return FoldPlan(k, seed, folds)


# A method factory takes (train inputs, train outputs, seed) and returns a
# callable mapping test inputs (rows) to predicted outputs (rows).
MethodFactory = Callable[[np.ndarray, np.ndarray, int], Callable[[np.ndarray], np.ndarray]]


def crossval(method: MethodFactory, inputs, outputs, k: int = 5, runs: int = 1,
             seed: int = 0) -> np.ndarray:
    """Per-output-dimension MSE averaged over folds and runs.

    Run ``i`` uses fold seed ``seed + i``; the same seed is handed to the
    method factory so stochastic trainers are reproducible.
    """
    x = np.asarray(inputs, dtype=float)
    y = np.asarray(outputs, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    total = np.zeros(y.shape[1])
    for run in range(runs):
        plan = kfold(len(x), k, seed + run)
        for f, test in enumerate(plan.folds):
            test = np.array(test)
            train = np.setdiff1d(np.arange(len(x)), test)
            predict = method(x[train], y[train], (seed + run) * 1000 + f)
            pred = np.asarray(predict(x[test]), dtype=float).reshape(len(test), -1)
            total += mse(pred, y[test])
    return total / (runs * k)
