import math

import numpy as np
import pytest

import oracles
from gopatterns.stats import (UndefinedCorrelation, crossval, kfold, mse, pca_backproject,
                              pca_fit, pca_project, pearson, top_loadings)


def test_pearson_basics():
    x = [1.0, 2.0, 3.0, 5.0]
    assert pearson(x, x) == pytest.approx(1.0)
    assert pearson(x, [-v for v in x]) == pytest.approx(-1.0)


def test_pearson_textbook_oracle():
    x, y = [1, 2, 3, 4], [1, 3, 2, 4]
    n = 4
    sxy = sum(a * b for a, b in zip(x, y)) - sum(x) * sum(y) / n
    sxx = sum(a * a for a in x) - sum(x) ** 2 / n
    syy = sum(b * b for b in y) - sum(y) ** 2 / n
    assert pearson(x, y) == pytest.approx(sxy / math.sqrt(sxx * syy), abs=1e-12)


def test_pearson_errors():
    with pytest.raises(UndefinedCorrelation):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        pearson([1, 2], [1, 2, 3])


def test_two_points():
    a, b = np.array([0.0, 0.0, 0.0]), np.array([2.0, 1.0, -2.0])
    model = pca_fit([a, b], 2)
    direction = (b - a) / np.linalg.norm(b - a)
    assert abs(model.projection[0] @ direction) == pytest.approx(1.0)
    assert model.eigenvalues[0] == pytest.approx(np.sum((b - a) ** 2) / 4)
    assert model.eigenvalues[1] == pytest.approx(0.0)


def test_isotropic_sample():
    x = np.random.default_rng(0).normal(size=(10_000, 5))
    model = pca_fit(x, 5)
    assert np.all(np.abs(model.explained - 0.2) < 0.1)


def test_eigenpairs_match_jacobi():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(60, 8)) @ rng.normal(size=(8, 8))
    model = pca_fit(x, 8)
    cov = np.cov(x.T, bias=True)
    values, vecs = oracles.jacobi_eigen(cov.tolist())
    for i in np.argsort(values)[::-1][:8]:
        v = np.array([row[i] for row in vecs])
        j = int(np.argmin(np.abs(model.eigenvalues - values[i])))
        assert model.eigenvalues[j] == pytest.approx(values[i], abs=1e-8)
        assert abs(model.projection[j] @ v) == pytest.approx(1.0, abs=1e-8)


def test_projection_properties():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(30, 6))
    model = pca_fit(x, 6)
    assert np.allclose(pca_project(model, model.mean), 0)
    assert np.allclose(pca_backproject(model, pca_project(model, x[3])), x[3], atol=1e-8)
    assert np.abs(pca_project(model, x).mean(axis=0)).max() < 1e-10
    assert np.allclose(pca_backproject(model, np.zeros(6)), model.mean)
    unit = np.zeros(6)
    unit[0] = 1
    assert np.allclose(pca_backproject(model, unit), model.mean + model.projection[0])
    assert np.all(np.diff(model.eigenvalues) <= 1e-12)


def test_fewer_vectors_than_dimensions():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(6, 40))
    model = pca_fit(x, 6)
    gram = np.linalg.eigvalsh(np.cov(x.T, bias=True))[::-1][:5]
    np.testing.assert_allclose(model.eigenvalues[:5], gram, atol=1e-10)
    assert model.eigenvalues[5] == 0.0
    np.testing.assert_allclose(model.projection @ model.projection.T, np.eye(6), atol=1e-10)


def test_pca_errors():
    with pytest.raises(ValueError):
        pca_fit([[1.0, 2.0]], 1)
    with pytest.raises(ValueError):
        pca_fit(np.zeros((5, 3)), 4)
    model = pca_fit(np.random.default_rng(0).normal(size=(5, 3)), 2)
    with pytest.raises(ValueError):
        pca_project(model, [1.0, 2.0])


def test_top_loadings():
    x = np.zeros((4, 3))
    x[:, 1] = [1, 2, 3, 4]
    model = pca_fit(x, 1)
    top, bottom = top_loadings(model, 0, ["a", "b", "c"], 1)
    assert top[0][0] == "b"


def test_kfold_partitions():
    plan = kfold(23, 5, 7)
    flat = sorted(i for fold in plan.folds for i in fold)
    assert flat == list(range(23))
    assert max(map(len, plan.folds)) - min(map(len, plan.folds)) <= 1
    assert plan == kfold(23, 5, 7)
    with pytest.raises(ValueError):
        kfold(3, 5, 0)


def test_crossval_reference_methods():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(20, 3))
    y = rng.normal(size=(20, 2)) * 3

    def perfect(xt, yt, seed):
        lookup = {tuple(r): o for r, o in zip(x, y)}
        return lambda q: np.array([lookup[tuple(r)] for r in q])

    def zero(xt, yt, seed):
        return lambda q: np.zeros((len(q), 2))

    assert np.allclose(crossval(perfect, x, y, 5, 3, 0), 0)
    np.testing.assert_allclose(crossval(zero, x, y, 5, 3, 0), (y ** 2).mean(axis=0))


def test_crossval_deterministic():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(15, 2))
    y = rng.normal(size=15)

    def noisy(xt, yt, seed):
        r = np.random.default_rng(seed)
        return lambda q: r.normal(size=len(q))

    a = crossval(noisy, x, y, 3, 4, 9)
    b = crossval(noisy, x, y, 3, 4, 9)
    assert a.tobytes() == b.tobytes()


def test_mse_per_dimension():
    np.testing.assert_allclose(mse([[1, 2], [3, 4]], [[1, 0], [1, 4]]), [2.0, 2.0])
