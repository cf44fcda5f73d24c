"""Generators for dependent dynamic RDPG series and the four benchmark scenarios.

All scenarios use ``T = 150`` with segments ``[1, 50]``, ``[51, 100]`` and
``[101, 150]``, so the true change points (first snapshots of new segments)
are ``{51, 101}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import InvalidInputError, ModelViolationError
from .rng import make_rng
from .series import AdjacencySeries, ChangePointSet
from .spectral import LatentSeries

SCENARIO_T = 150
SCENARIO_STARTS = (1, 51, 101)
SCENARIO_TRUTH = (51, 101)

# slack on the [0, 1] range check for edge probabilities
_PROB_TOL = 1e-12


@dataclass(frozen=True)
class SegmentSpec:
    """A segment starting at 1-based time ``start`` whose latent law is ``sampler``."""

    start: int
    sampler: object


@dataclass(frozen=True)
class Model1Config:
    T: int
    n: int
    d: int
    segments: tuple
    rho: float = 0.0
    seed: int = 0

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if self.T < 1 or self.n < 2 or self.d < 1:
            raise InvalidInputError("need T >= 1, n >= 2, d >= 1")
        if not segs or segs[0].start != 1:
            raise InvalidInputError("the first segment must start at t = 1")
        starts = [sg.start for sg in segs]
        if any(b <= a for a, b in zip(starts, starts[1:])) or starts[-1] > self.T:
            raise InvalidInputError(f"segment starts must increase within [1, T]: {starts}")
        if not 0.0 <= self.rho < 1.0:
            raise InvalidInputError(f"rho must lie in [0, 1), got {self.rho}")
        spot = make_rng(self.seed, "spot-check")
        for sg in segs:
            x = np.asarray(sg.sampler.sample(spot, 200), dtype=float)
            if x.shape[1] != self.d:
                raise InvalidInputError(f"segment at t={sg.start} samples dimension {x.shape[1]} != d={self.d}")
            g = x @ x.T
            if g.min() < -_PROB_TOL or g.max() > 1 + _PROB_TOL:
                raise ModelViolationError(
                    f"segment at t={sg.start}: sampled inner products leave [0, 1] "
                    f"(range [{g.min():.4g}, {g.max():.4g}])"
                )


@dataclass
class LabeledSeries:
    series: AdjacencySeries
    truth: ChangePointSet
    latents: LatentSeries = None
    info: dict = field(default_factory=dict)


def _edges(P, rng):
    """One symmetric Bernoulli(P) adjacency matrix with zero diagonal."""
    n = P.shape[0]
    iu = np.triu_indices(n, k=1)
    upper = rng.random(iu[0].size) < P[iu]
    A = np.zeros((n, n), dtype=np.uint8)
    A[iu] = upper
    return A | A.T


def _check_probs(P, t):
    bad = (P < -_PROB_TOL) | (P > 1 + _PROB_TOL)
    np.fill_diagonal(bad, False)
    if bad.any():
        i, j = map(int, np.argwhere(bad)[0])
        raise ModelViolationError(
            f"edge probability {P[i, j]!r} outside [0, 1] at t={t + 1}, i={i + 1}, j={j + 1}"
        )


def sticky_latents(T, starts, fresh, hold, rng):
    """Latent paths that redraw at segment starts and otherwise hold w.p. ``hold``.

    ``fresh(t, rng)`` returns an ``(n, d)`` array of new draws for 0-based time
    ``t``; ``starts`` are 1-based segment starts. Returns the ``(T, n, d)``
    positions and the per-step boolean hold masks (``held[t, i]``).
    """
    seg_starts = {s - 1 for s in starts}
    X = None
    held = None
    for t in range(T):
        draw = fresh(t, rng)
        if X is None:
            X = np.empty((T,) + draw.shape)
            held = np.zeros((T, draw.shape[0]), dtype=bool)
        if t in seg_starts:
            X[t] = draw
        else:
            keep = rng.random(draw.shape[0]) < hold
            held[t] = keep
            X[t] = np.where(keep[:, None], X[t - 1], draw)
    return X, held


def _segment_index(starts, t):
    """0-based segment index of 0-based time ``t``."""
    return int(np.searchsorted(np.asarray(starts) - 1, t, side="right") - 1)


def _second_moment_spectrum(X, starts):
    out = []
    for s in starts:
        x = X[s - 1]
        out.append(np.linalg.eigvalsh(x.T @ x / len(x))[::-1].tolist())
    return out


def gen_model1(cfg: Model1Config) -> LabeledSeries:
    """Sample a dependent dynamic RDPG.

    At every segment start all latent positions are drawn afresh from the
    segment law; inside a segment each node keeps its previous position with
    probability ``rho`` and otherwise redraws. Edges are independent
    Bernoulli(``X_i^T X_j``) given the positions.
    """
    rng = make_rng(cfg.seed, "model1")
    starts = [sg.start for sg in cfg.segments]

    def fresh(t, r):
        law = cfg.segments[_segment_index(starts, t)].sampler
        return np.asarray(law.sample(r, cfg.n), dtype=float)

    X, held = sticky_latents(cfg.T, starts, fresh, cfg.rho, rng)
    A = np.empty((cfg.T, cfg.n, cfg.n), dtype=np.uint8)
    for t in range(cfg.T):
        P = X[t] @ X[t].T
        _check_probs(P, t)
        A[t] = _edges(P, rng)
    info = {
        "model": "model1",
        "rho": cfg.rho,
        "hold_fraction": held[[t for t in range(cfg.T) if t + 1 not in starts]].mean()
        if cfg.T > len(starts)
        else float("nan"),
        "second_moment_eigenvalues": _second_moment_spectrum(X, starts),
    }
    return LabeledSeries(AdjacencySeries(A), ChangePointSet(tuple(starts[1:])), LatentSeries(X), info)


def community_labels(n: int, k: int = 4) -> np.ndarray:
    """Contiguous community labels with sizes differing by at most one."""
    return np.concatenate([np.full(len(c), i) for i, c in enumerate(np.array_split(np.arange(n), k))])


def gen_scenario1(n: int, rho: float, seed) -> LabeledSeries:
    """Four-block SBM whose edges follow a sticky Markov chain.

    Block probabilities are 0.5 within / 0.3 between on ``[1, 50]`` and
    ``[101, 150]``, and 0.45 / 0.2 on ``[51, 100]``. Each segment starts from
    independent Bernoulli draws; afterwards an edge present at ``t`` stays with
    probability ``rho + (1 - rho) E`` and an absent edge appears with
    probability ``(1 - rho) E``, which keeps the marginal at ``E``.
    """
    if not 0.0 <= rho < 1.0:
        raise InvalidInputError(f"rho must lie in [0, 1), got {rho}")
    rng = make_rng(seed, "scenario1")
    labels = community_labels(n)
    same = labels[:, None] == labels[None, :]
    P = np.where(same, 0.5, 0.3)
    Q = np.where(same, 0.45, 0.2)
    iu = np.triu_indices(n, k=1)
    A = np.zeros((SCENARIO_T, n, n), dtype=np.uint8)
    prev = None
    for t in range(SCENARIO_T):
        E = (Q if 51 <= t + 1 <= 100 else P)[iu]
        u = rng.random(E.size)
        if t + 1 in SCENARIO_STARTS:
            cur = u < E
        else:
            cur = np.where(prev, u < rho + (1.0 - rho) * E, u < (1.0 - rho) * E)
        A[t][iu] = cur
        A[t] |= A[t].T
        prev = cur
    info = {"scenario": 1, "n": n, "rho": rho, "communities": labels.tolist()}
    return LabeledSeries(AdjacencySeries(A), ChangePointSet(SCENARIO_TRUTH), None, info)


def gen_scenario2(n: int, eps: float, seed) -> LabeledSeries:
    """One-dimensional RDPG, fresh ``U[0.2, 0.8]`` positions at every step.

    On ``[51, 100]`` the first ``floor(n * eps)`` nodes are shifted up by 0.2.
    """
    rng = make_rng(seed, "scenario2")
    k = int(np.floor(n * eps))
    X = rng.uniform(0.2, 0.8, size=(SCENARIO_T, n, 1))
    X[50:100, :k] += 0.2
    A = np.empty((SCENARIO_T, n, n), dtype=np.uint8)
    for t in range(SCENARIO_T):
        P = X[t] @ X[t].T
        _check_probs(P, t)
        A[t] = _edges(P, rng)
    info = {"scenario": 2, "n": n, "eps": eps, "shifted_nodes": k}
    return LabeledSeries(AdjacencySeries(A), ChangePointSet(SCENARIO_TRUTH), LatentSeries(X), info)


def gen_scenario3(n: int, seed) -> LabeledSeries:
    """Logistic latent space model outside ``[51, 100]``, Beta(100, 100) inside.

    Outside the middle segment each node redraws ``Z_i ~ N(0, I_3)`` with
    probability 0.9 (keeps it with probability 0.1) and ``P = logistic(Z Z^T)``.
    Inside, the whole probability matrix is kept with probability 0.9 and
    otherwise redrawn entrywise from Beta(100, 100). Not an RDPG, so no latent
    positions are returned.
    """
    rng = make_rng(seed, "scenario3")
    iu = np.triu_indices(n, k=1)
    A = np.empty((SCENARIO_T, n, n), dtype=np.uint8)
    Z = None
    Pmid = None
    node_holds = []
    matrix_holds = []
    for t in range(SCENARIO_T):
        tt = t + 1
        if 51 <= tt <= 100:
            if tt == 51 or rng.random() >= 0.9:
                vals = rng.beta(100.0, 100.0, size=iu[0].size)
                Pmid = np.zeros((n, n))
                Pmid[iu] = vals
                Pmid = Pmid + Pmid.T
                if tt != 51:
                    matrix_holds.append(False)
            else:
                matrix_holds.append(True)
            P = Pmid
        else:
            draw = rng.standard_normal((n, 3))
            if tt in (1, 101):
                Z = draw
            else:
                keep = rng.random(n) >= 0.9
                node_holds.append(keep)
                Z = np.where(keep[:, None], Z, draw)
            P = expit(Z @ Z.T)
        A[t] = _edges(P, rng)
    info = {
        "scenario": 3,
        "n": n,
        "node_hold_fraction": float(np.mean(node_holds)),
        "matrix_hold_fraction": float(np.mean(matrix_holds)),
    }
    return LabeledSeries(AdjacencySeries(A), ChangePointSet(SCENARIO_TRUTH), None, info)


def gen_scenario4(n: int, eps: float, seed) -> LabeledSeries:
    """Five-dimensional Dirichlet RDPG with sticky positions (hold w.p. 0.9).

    Positions follow Dirichlet(1, ..., 1), except that on ``[51, 100]`` the
    first ``floor(n * eps)`` nodes draw from Dirichlet(500, ..., 500).
    """
    rng = make_rng(seed, "scenario4")
    k = int(np.floor(n * eps))
    flat = np.ones(5)
    peaked = np.full(5, 500.0)

    def fresh(t, r):
        x = r.dirichlet(flat, size=n)
        if 50 <= t < 100 and k:
            x[:k] = r.dirichlet(peaked, size=k)
        return x

    X, held = sticky_latents(SCENARIO_T, SCENARIO_STARTS, fresh, 0.9, rng)
    A = np.empty((SCENARIO_T, n, n), dtype=np.uint8)
    for t in range(SCENARIO_T):
        P = X[t] @ X[t].T
        _check_probs(P, t)
        A[t] = _edges(P, rng)
    steps = [t for t in range(SCENARIO_T) if t + 1 not in SCENARIO_STARTS]
    info = {
        "scenario": 4,
        "n": n,
        "eps": eps,
        "shifted_nodes": k,
        "hold_fraction": float(held[steps].mean()),
    }
    return LabeledSeries(AdjacencySeries(A), ChangePointSet(SCENARIO_TRUTH), LatentSeries(X), info)


def generate(scenario, n: int, seed, rho: float = 0.0, eps: float = 0.3) -> LabeledSeries:
    """Dispatch on a scenario id (1-4)."""
    scenario = int(scenario)
    if scenario == 1:
        return gen_scenario1(n, rho, seed)
    if scenario == 2:
        return gen_scenario2(n, eps, seed)
    if scenario == 3:
        return gen_scenario3(n, seed)
    if scenario == 4:
        return gen_scenario4(n, eps, seed)
    raise InvalidInputError(f"unknown scenario {scenario!r}")
