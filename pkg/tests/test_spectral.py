import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdpg_cpd.errors import InvalidDimensionError, InvalidInputError
from rdpg_cpd.series import AdjacencySeries
from rdpg_cpd.spectral import LatentSeries, embed_series, scaled_pca

from conftest import random_series


def _psd(rng, n, d):
    X = rng.standard_normal((n, d))
    return X @ X.T


def test_zero_matrix():
    np.testing.assert_array_equal(scaled_pca(np.zeros((2, 2)), 1), np.zeros((2, 1)))


def test_two_by_two_tie_prefers_positive_eigenvalue():
    X = scaled_pca(np.array([[0.0, 1.0], [1.0, 0.0]]), 1)
    np.testing.assert_allclose(X[:, 0], [1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-15)


def test_rank_one():
    x = np.array([0.6, 0.8])
    np.testing.assert_allclose(scaled_pca(np.outer(x, x), 1)[:, 0], x, atol=1e-15)


def test_negative_eigenvalues_use_magnitude():
    # eigenvalues 3 and -5: the -5 direction ranks first
    A = np.diag([3.0, -5.0])
    X = scaled_pca(A, 2)
    np.testing.assert_allclose(np.abs(X), [[0, np.sqrt(3)], [np.sqrt(5), 0]], atol=1e-15)


@pytest.mark.parametrize("n,d", [(5, 1), (30, 3), (80, 8)])
def test_reconstruction(rng, n, d):
    P = _psd(rng, n, d)
    X = scaled_pca(P, d)
    assert np.linalg.norm(X @ X.T - P) <= 1e-8


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_reconstruction_property(n, d, seed):
    d = min(d, n)
    P = _psd(np.random.default_rng(seed), n, d) / n
    X = scaled_pca(P, d)
    assert X.shape == (n, d)
    assert np.linalg.norm(X @ X.T - P) <= 1e-8


def test_rotation_invariance(rng):
    X = scaled_pca(_psd(rng, 20, 4), 4)
    W, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    np.testing.assert_allclose((X @ W) @ (X @ W).T, X @ X.T, atol=1e-10)


def test_column_count_with_zero_eigenvalues():
    x = np.array([0.5, 0.5, 0.5])
    X = scaled_pca(np.outer(x, x), 3)
    assert X.shape == (3, 3)
    np.testing.assert_allclose(X[:, 1:], 0.0, atol=1e-7)


def test_deterministic(rng):
    A = random_series(rng, 1, 30).snapshots[0]
    assert np.array_equal(scaled_pca(A, 4), scaled_pca(A, 4))


def test_sign_convention(rng):
    X = scaled_pca(_psd(rng, 15, 3), 3)
    piv = np.argmax(np.abs(X), axis=0)
    assert np.all(X[piv, np.arange(3)] > 0)


@pytest.mark.parametrize(
    "A,d,err",
    [
        (np.zeros((3, 3)), 4, InvalidDimensionError),
        (np.zeros((3, 3)), 0, InvalidDimensionError),
        (np.array([[0.0, np.nan], [np.nan, 0.0]]), 1, InvalidInputError),
        (np.array([[0.0, 1.0], [0.0, 0.0]]), 1, InvalidInputError),
    ],
)
def test_errors(A, d, err):
    with pytest.raises(err):
        scaled_pca(A, d)


def test_embed_identical_snapshots(rng):
    A = random_series(rng, 1, 12).snapshots[0]
    L = embed_series(AdjacencySeries(np.stack([A] * 4)), 2)
    assert all(np.array_equal(L[0], L[t]) for t in range(4))


def test_embed_single_snapshot(rng):
    s = random_series(rng, 1, 10)
    L = embed_series(s, 3)
    assert isinstance(L, LatentSeries) and L.T == 1
    assert np.array_equal(L[0], scaled_pca(s.snapshots[0], 3))


def test_embed_parallel_matches_serial(rng):
    s = random_series(rng, 6, 25)
    assert np.array_equal(embed_series(s, 3).positions, embed_series(s, 3, n_jobs=3).positions)


def test_embed_exact_rank_series(rng):
    P = np.stack([_psd(rng, 40, 3) / 40 for _ in range(5)])
    L = embed_series(P, 3)
    for t in range(5):
        assert np.linalg.norm(L[t] @ L[t].T - P[t]) <= 1e-8


def test_embed_error_names_snapshot():
    bad = np.zeros((2, 3, 3))
    bad[1, 0, 1] = np.inf
    with pytest.raises(InvalidInputError, match="t=2"):
        embed_series(bad, 1)
