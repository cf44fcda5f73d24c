"""Pair scores and the Kolmogorov-Smirnov type CUSUM statistic.

Time conventions: a :class:`PairSeries` row ``k`` (0-based) holds the scores
of snapshot ``k + 1``. For a triple ``0 <= s < t < e <= T`` the left segment is
snapshots ``s+1..t`` (rows ``s:t``) and the right segment snapshots
``t+1..e`` (rows ``t:e``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidIntervalError
from .spectral import LatentSeries

# rows of the (t, grid) CUSUM table evaluated per chunk in max_cusum
_CHUNK = 64


@dataclass(frozen=True)
class PairSet:
    """Fixed disjoint node pairing ``{(i, h + i)}`` with ``h = n_effective / 2``.

    ``left`` and ``right`` are 0-based node indices; :attr:`pairs` reports the
    1-based pairs.
    """

    n: int
    n_effective: int
    left: tuple
    right: tuple

    @property
    def m(self) -> int:
        return len(self.left)

    @property
    def pairs(self):
        return [(i + 1, j + 1) for i, j in zip(self.left, self.right)]


def pair_set(n: int) -> PairSet:
    """Pair node ``i`` with node ``n/2 + i``; for odd ``n`` the last node is dropped."""
    if n < 2:
        raise InvalidInputError(f"need at least 2 nodes, got n={n}")
    n_eff = n - (n % 2)
    h = n_eff // 2
    return PairSet(n, n_eff, tuple(range(h)), tuple(range(h, n_eff)))


@dataclass(frozen=True, eq=False)
class PairSeries:
    """``T x m`` matrix of inner-product scores on a fixed pair set."""

    scores: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.scores, dtype=float)
        if y.ndim != 2 or y.shape[0] < 1 or y.shape[1] < 1:
            raise InvalidInputError(f"expected a (T, m) array, got shape {y.shape}")
        if not np.all(np.isfinite(y)):
            raise InvalidInputError("pair scores must be finite")
        y = np.array(y, copy=True)
        y.setflags(write=False)
        object.__setattr__(self, "scores", y)

    @property
    def T(self) -> int:
        return self.scores.shape[0]

    @property
    def m(self) -> int:
        return self.scores.shape[1]

    @property
    def n_effective(self) -> int:
        return 2 * self.m


@dataclass(frozen=True)
class CusumValue:
    s: int
    t: int
    e: int
    value: float
    argmax_z: float


def pair_scores(latents: LatentSeries, O: PairSet) -> PairSeries:
    """Inner products of paired rows, ``scores[t, k] = <X_t[i_k], X_t[j_k]>``."""
    x = latents.positions if isinstance(latents, LatentSeries) else np.asarray(latents)
    if O.m == 0 or max(O.right) >= x.shape[1]:
        raise InvalidInputError(
            f"pair set for n={O.n} does not fit latent positions with n={x.shape[1]}"
        )
    left = x[:, list(O.left), :]
    right = x[:, list(O.right), :]
    return PairSeries(np.einsum("tkd,tkd->tk", left, right))


def _check_triple(Y: PairSeries, s, t, e):
    if not (0 <= s < t < e <= Y.T):
        raise InvalidIntervalError(f"need 0 <= s < t < e <= T={Y.T}, got ({s}, {t}, {e})")


def cusum_weights(s: int, t: int, e: int, n: int):
    """Left and right weights of the CUSUM contrast for ``n`` effective nodes."""
    w_left = np.sqrt(2.0 * (e - t) / (n * (e - s) * (t - s)))
    w_right = np.sqrt(2.0 * (t - s) / (n * (e - s) * (e - t)))
    return w_left, w_right


def _scale(s, t, e, n):
    # w_left * left - w_right * right == (left (e-t) - right (t-s)) * scale;
    # the integer contrast is exact, so balanced splits give exactly 0
    return np.sqrt(2.0 / (n * (e - s) * (t - s) * (e - t)))


def cusum_at(Y: PairSeries, s: int, t: int, e: int, z: float) -> float:
    """CUSUM statistic of the indicators ``1{Y <= z}`` at split ``t`` of ``(s, e]``."""
    _check_triple(Y, s, t, e)
    left = np.count_nonzero(Y.scores[s:t] <= z)
    right = np.count_nonzero(Y.scores[t:e] <= z)
    return float(abs(left * (e - t) - right * (t - s)) * _scale(s, t, e, Y.n_effective))


def cusum_sup(Y: PairSeries, s: int, t: int, e: int) -> CusumValue:
    """Exact supremum over ``z`` of :func:`cusum_at`.

    The statistic is a right-continuous step function of ``z`` that only
    jumps at sample values in ``(s, e]``, so evaluating it at every distinct
    sample value is exact.
    """
    _check_triple(Y, s, t, e)
    grid = np.unique(Y.scores[s:e])
    left = np.searchsorted(np.sort(Y.scores[s:t], axis=None), grid, side="right")
    right = np.searchsorted(np.sort(Y.scores[t:e], axis=None), grid, side="right")
    vals = np.abs(left * (e - t) - right * (t - s)) * _scale(s, t, e, Y.n_effective)
    k = int(np.argmax(vals))
    return CusumValue(s, t, e, float(vals[k]), float(grid[k]))


def cusum_profile(Y: PairSeries, s: int, e: int) -> np.ndarray:
    """``sup_z`` CUSUM for every split ``t = s+1, ..., e-1``.

    One pass over the segment's distinct values; cost is
    ``O((e - s)^2 * m)`` time and ``O(_CHUNK * (e - s) * m)`` memory.
    """
    if not (0 <= s < e <= Y.T) or e - s < 2:
        raise InvalidIntervalError(f"need 0 <= s, s + 1 < e <= T={Y.T}, got ({s}, {e})")
    L = e - s
    n = Y.n_effective
    block = Y.scores[s:e]
    grid = np.unique(block)
    rows = np.sort(block, axis=1)
    counts = np.empty((L, grid.size), dtype=np.int64)
    for k in range(L):
        counts[k] = np.searchsorted(rows[k], grid, side="right")
    np.cumsum(counts, axis=0, out=counts)
    total = counts[L - 1]

    out = np.empty(L - 1)
    for lo in range(1, L, _CHUNK):
        hi = min(lo + _CHUNK, L)
        tl = np.arange(lo, hi)[:, None]
        left = counts[lo - 1 : hi - 1]
        contrast = np.abs(left * (L - tl) - (total - left) * tl).max(axis=1)
        out[lo - 1 : hi - 1] = contrast * _scale(0, tl[:, 0], L, n)
    return out


def max_cusum(Y: PairSeries, s: int, e: int):
    """Best split of ``(s, e]``.

    Returns ``(b, a)`` where ``b`` is the smallest ``t`` in ``{s+1, ..., e-1}``
    maximising the CUSUM supremum and ``a`` is that maximum.
    """
    if e - s <= 1:
        raise InvalidIntervalError(f"interval ({s}, {e}) has no interior split")
    prof = cusum_profile(Y, s, e)
    k = int(np.argmax(prof))
    return s + 1 + k, float(prof[k])
