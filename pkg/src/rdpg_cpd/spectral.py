"""Adjacency spectral embedding of single snapshots and whole series."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError, InvalidInputError
from .series import AdjacencySeries

# relative gap below which two |eigenvalues| count as tied
_TIE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class LatentSeries:
    """Per-snapshot ``n x d`` latent position estimates, stacked as ``(T, n, d)``."""

    positions: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.positions, dtype=float)
        if x.ndim != 3:
            raise InvalidInputError(f"expected a (T, n, d) array, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InvalidInputError("latent positions must be finite")
        x = np.array(x, copy=True)
        x.setflags(write=False)
        object.__setattr__(self, "positions", x)

    @property
    def T(self) -> int:
        return self.positions.shape[0]

    @property
    def n(self) -> int:
        return self.positions.shape[1]

    @property
    def d(self) -> int:
        return self.positions.shape[2]

    def __getitem__(self, t):
        return self.positions[t]


def _order_by_magnitude(w):
    """Indices sorting eigenvalues by |w| descending.

    Near-equal magnitudes are tied; ties prefer the larger signed eigenvalue,
    then the lower solver index.
    """
    mag = np.abs(w)
    order = list(np.lexsort((np.arange(len(w)), -w, -mag)))
    scale = max(float(mag.max(initial=0.0)), np.finfo(float).tiny)
    out = []
    i = 0
    while i < len(order):
        j = i + 1
        while j < len(order) and mag[order[i]] - mag[order[j]] <= _TIE_RTOL * scale:
            j += 1
        group = sorted(order[i:j], key=lambda k: (-w[k], k))
        out.extend(group)
        i = j
    return np.asarray(out, dtype=int)


def scaled_pca(A, d: int) -> np.ndarray:
    """Top-``d`` scaled eigenvectors of a symmetric matrix.

    Eigenpairs are ranked by absolute eigenvalue and each eigenvector is
    scaled by ``sqrt(|lambda|)``. Signs are fixed so the largest-magnitude
    coordinate of every eigenvector is positive.

    Parameters
    ----------
    A : array_like, shape (n, n)
        Symmetric matrix. No positivity is assumed.
    d : int
        Embedding dimension, ``1 <= d <= n``.

    Returns
    -------
    numpy.ndarray, shape (n, d)
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise InvalidInputError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    if not isinstance(d, (int, np.integer)) or d < 1 or d > n:
        raise InvalidDimensionError(f"embedding dimension d={d} must satisfy 1 <= d <= n={n}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("matrix has non-finite entries")
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise InvalidInputError("matrix is not symmetric")

    w, v = np.linalg.eigh(A)
    idx = _order_by_magnitude(w)[:d]
    vecs = v[:, idx]
    pivot = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[pivot, np.arange(d)])
    signs[signs == 0] = 1.0
    return vecs * signs * np.sqrt(np.abs(w[idx]))


def embed_series(series, d: int, n_jobs: int = 1) -> LatentSeries:
    """Embed every snapshot of ``series`` with :func:`scaled_pca`.

    ``series`` may be an :class:`AdjacencySeries` or any ``(T, n, n)`` array.
    With ``n_jobs > 1`` snapshots are embedded on a thread pool; the result is
    identical to the serial computation.
    """
    mats = series.snapshots if isinstance(series, AdjacencySeries) else np.asarray(series)

    def one(t):
        try:
            return scaled_pca(mats[t], d)
        except InvalidInputError as exc:
            raise type(exc)(f"snapshot t={t + 1}: {exc}") from exc

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            out = list(pool.map(one, range(len(mats))))
    else:
        out = [one(t) for t in range(len(mats))]
    return LatentSeries(np.stack(out))
