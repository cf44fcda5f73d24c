"""Threshold selection with a nonparametric BIC-type criterion.

Each column of the pair-score matrix is a univariate series. A candidate
segmentation is scored per column by the integrated nonparametric
log-likelihood of its segment empirical CDFs, evaluated at the pooled order
statistics ``z_(1) <= ... <= z_(T)`` with weights ``T / ((i - 1/2)(T - i + 1/2))``:

    loglik_j = sum_seg L_seg * sum_i w_i [F log F + (1 - F) log(1 - F)](z_(i)),

with ``0 log 0 = 0``. The column score is ``-loglik_j + xi * K`` and column
scores are summed; lower is better.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.stats import rankdata

from .cusum import PairSeries, max_cusum
from .errors import InvalidInputError
from .segmentation import nonpar_rdpg_cpd
from .series import ChangePointSet

DEFAULT_GRID_SIZE = 32
# grid spans [GRID_FLOOR * a_max, a_max]
GRID_FLOOR = 1e-3
# cap on the estimated lag-1 autocorrelation used for the dependence factor
_MAX_AUTOCORR = 0.95


def _weights(T):
    i = np.arange(1, T + 1, dtype=float)
    return T / ((i - 0.5) * (T - i + 0.5))


def null_gain_floor(T: int) -> float:
    """``sum_i w_i / 2``: approximate per-column log-likelihood gain of one
    spurious split, since each order statistic contributes about half a
    chi-square(1) variable."""
    return float(_weights(T).sum() / 2.0)


def default_xi(n_effective: int, T=None) -> float:
    """Penalty ``log(n)^2.1 / 5`` for ``n`` effective nodes.

    With ``T`` given, the penalty is raised to at least :func:`null_gain_floor`,
    which matters for small networks where ``log(n)^2.1 / 5`` falls below the
    gain of a spurious split.
    """
    xi = float(np.log(n_effective) ** 2.1 / 5.0)
    return xi if T is None else max(xi, null_gain_floor(T))


class TauGrid(NamedTuple):
    values: np.ndarray
    a_max: float
    degenerate: bool


@dataclass(frozen=True)
class ModelCandidate:
    tau: float
    points: ChangePointSet
    score: float
    xi: float = None
    dependence_factor: float = 1.0
    n_models: int = 1


def _top_level(Y, intervals, cache):
    best = 0.0
    for alpha, beta in intervals:
        if beta - alpha > 1:
            key = (alpha, beta)
            if key not in cache:
                cache[key] = max_cusum(Y, alpha, beta)
            best = max(best, cache[key][1])
    return best


def tau_grid(Y: PairSeries, intervals, G: int = DEFAULT_GRID_SIZE, cache=None) -> TauGrid:
    """Log-spaced thresholds from ``1e-3 * a_max`` to ``a_max``.

    ``a_max`` is the largest CUSUM over the interval set on the full range, so
    the top threshold detects nothing. If ``a_max == 0`` a single threshold
    is returned with ``degenerate=True``.
    """
    if G < 2:
        raise InvalidInputError(f"grid size must be >= 2, got {G}")
    a_max = _top_level(Y, tuple(intervals), {} if cache is None else cache)
    if a_max <= 0.0:
        return TauGrid(np.array([1.0]), 0.0, True)
    return TauGrid(np.geomspace(GRID_FLOOR * a_max, a_max, G), a_max, False)


def _segments(points, T):
    edges = [0] + [p - 1 for p in points] + [T]
    return list(zip(edges[:-1], edges[1:]))


def _xlogx(p):
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log(p[pos])
    return out


def column_loglik(Y: PairSeries, points) -> np.ndarray:
    """Per-column integrated log-likelihood (always <= 0) of a segmentation."""
    y = Y.scores
    T, m = y.shape
    # min-rank: 1 + number of column entries strictly below
    low = rankdata(y, method="min", axis=0).astype(np.int64)
    w = _weights(T)
    cols = np.arange(m)
    total = np.zeros(m)
    for a, b in _segments(points, T):
        L = b - a
        flat = (low[a:b] - 1) * m + cols
        counts = np.bincount(flat.ravel(), minlength=T * m).reshape(T, m)
        F = np.cumsum(counts, axis=0) / L
        h = _xlogx(F) + _xlogx(1.0 - F)
        total += L * (w @ h)
    return total


def bic_score(Y: PairSeries, points, xi: float) -> float:
    """Summed per-column BIC score of the segmentation given by ``points``.

    ``points`` are change point locations (first snapshots of new segments),
    as a :class:`ChangePointSet` or a sequence of ints.
    """
    pts = tuple(points.points if isinstance(points, ChangePointSet) else points)
    if any(not (2 <= p <= Y.T) for p in pts) or list(pts) != sorted(set(pts)):
        raise InvalidInputError(f"invalid change points {pts} for T={Y.T}")
    loglik = column_loglik(Y, pts)
    return float(np.sum(-loglik + xi * len(pts)))


def dependence_factor(Y: PairSeries) -> float:
    """Long-run variance inflation ``(1 + r) / (1 - r)`` of the column series.

    ``r`` is a lag-1 autocorrelation estimated from within-column ranks as
    ``sum (R_t - R_{t-2})^2 / sum (R_t - R_{t-1})^2 - 1``, which uses only
    differences and so is barely affected by a few level shifts. ``r`` is
    clipped to ``[0, 0.95]``; independent columns give a factor near 1.
    """
    if Y.T < 3:
        return 1.0
    R = rankdata(Y.scores, axis=0)
    d1 = np.sum(np.diff(R, axis=0) ** 2)
    if d1 == 0:
        return 1.0
    d2 = np.sum((R[2:] - R[:-2]) ** 2)
    r = float(np.clip(d2 / d1 - 1.0, 0.0, _MAX_AUTOCORR))
    return (1.0 + r) / (1.0 - r)


def select_tau(
    Y: PairSeries,
    intervals,
    xi=None,
    G: int = DEFAULT_GRID_SIZE,
    cache=None,
    adjust_dependence: bool = True,
) -> ModelCandidate:
    """Run the detector over a threshold grid and keep the lowest BIC model.

    Parameters
    ----------
    xi : float, optional
        Per-column penalty per change point; defaults to
        ``default_xi(n_effective, T)``.
    adjust_dependence : bool
        Multiply ``xi`` by :func:`dependence_factor` so temporally dependent
        columns are not over-segmented.

    Identical change point sets are scored once; equal scores resolve to the
    smaller threshold.
    """
    intervals = tuple(intervals)
    cache = {} if cache is None else cache
    xi = default_xi(Y.n_effective, Y.T) if xi is None else float(xi)
    phi = dependence_factor(Y) if adjust_dependence else 1.0
    xi_eff = xi * phi
    grid = tau_grid(Y, intervals, G, cache)

    seen = {}
    for tau in grid.values:
        cps = nonpar_rdpg_cpd(Y, intervals, float(tau), cache=cache)
        if cps.points not in seen:
            seen[cps.points] = (float(tau), cps)

    best = None
    for pts, (tau, cps) in seen.items():
        score = bic_score(Y, pts, xi_eff)
        if best is None or score < best[0] or (score == best[0] and tau < best[1]):
            best = (score, tau, cps)
    score, tau, cps = best
    return ModelCandidate(tau, cps, score, xi_eff, phi, len(seen))
