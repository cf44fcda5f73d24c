"""Wild binary segmentation over the KS-CUSUM, and the end-to-end detector."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .cusum import PairSeries, max_cusum, pair_scores, pair_set
from .errors import InvalidInputError
from .rng import make_rng
from .series import AdjacencySeries, ChangePointSet
from .spectral import embed_series

AUTO = "AUTO"


@dataclass(frozen=True)
class IntervalSet:
    """Random intervals ``(alpha_m, beta_m)`` with ``beta_m - alpha_m >= 2``."""

    intervals: tuple
    seed: int
    M: int
    T: int

    def __post_init__(self):
        ivs = tuple((int(a), int(b)) for a, b in self.intervals)
        if len(ivs) != self.M:
            raise InvalidInputError(f"expected {self.M} intervals, got {len(ivs)}")
        for a, b in ivs:
            if not (0 <= a and b <= self.T and b - a >= 2):
                raise InvalidInputError(f"bad interval ({a}, {b}) for T={self.T}")
        object.__setattr__(self, "intervals", ivs)

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return self.M


def draw_intervals(T: int, M: int, seed) -> IntervalSet:
    """Draw ``M`` intervals: ``alpha ~ U{0..T-2}``, then ``beta ~ U{alpha+2..T}``."""
    if T < 3:
        raise InvalidInputError(f"need T >= 3 to draw intervals, got T={T}")
    if M < 1:
        raise InvalidInputError(f"need M >= 1, got M={M}")
    rng = make_rng(seed, "intervals")
    alpha = rng.integers(0, T - 1, size=M)
    beta = alpha + 2 + rng.integers(0, T - 1 - alpha)
    return IntervalSet(tuple(zip(alpha.tolist(), beta.tolist())), int(seed), M, T)


def _wbs(T, intervals, tau, s, e, split_fn):
    """Shared WBS recursion (explicit stack); ``split_fn(s, e) -> (b, a)``."""
    if tau <= 0:
        raise InvalidInputError(f"threshold must be positive, got {tau}")
    if not (0 <= s < e <= T):
        raise InvalidInputError(f"need 0 <= s < e <= T={T}, got ({s}, {e})")
    found = []
    stack = [(s, e)]
    while stack:
        s0, e0 = stack.pop()
        best_a, best_b, best_iv = -1.0, None, None
        for alpha, beta in intervals:
            sm, em = max(s0, alpha), min(e0, beta)
            if em - sm > 1:
                b, a = split_fn(sm, em)
                if a > best_a:
                    best_a, best_b, best_iv = a, b, (sm, em)
        if best_b is not None and best_a > tau:
            # the split b closes the old segment; the new one starts at b + 1
            found.append((best_b + 1, best_a, best_iv))
            stack.append((best_b + 1, e0))
            stack.append((s0, best_b))
    found.sort()
    return ChangePointSet(
        tuple(p for p, _, _ in found),
        tuple(a for _, a, _ in found),
        tuple(iv for _, _, iv in found),
    )


def nonpar_rdpg_cpd(Y: PairSeries, intervals, tau: float, s: int = 0, e=None, cache=None):
    """Wild binary segmentation with the KS-CUSUM.

    Parameters
    ----------
    Y : PairSeries
    intervals : IntervalSet or iterable of (alpha, beta)
    tau : float
        Detection threshold; a split is kept when its CUSUM exceeds ``tau``.
    s, e : int
        Search range ``(s, e]`` in snapshot indices; defaults to the whole series.
    cache : dict, optional
        Memo of :func:`max_cusum` results keyed by ``(s, e)``. Sharing one
        dict across thresholds on the same ``Y`` avoids recomputation.

    Returns
    -------
    ChangePointSet
        Each point is the first snapshot of a new segment (``b + 1`` for the
        maximising split ``b``), with its CUSUM value and detecting interval.
    """
    e = Y.T if e is None else e
    cache = {} if cache is None else cache

    def split(sm, em):
        key = (sm, em)
        if key not in cache:
            cache[key] = max_cusum(Y, sm, em)
        return cache[key]

    return _wbs(Y.T, tuple(intervals), tau, s, e, split)


@dataclass
class DetectionResult:
    points: ChangePointSet
    tau: float
    d: int
    M: int
    seed: int
    n: int
    T: int
    tau_policy: str = AUTO
    xi: float = None
    stage_timings: dict = field(default_factory=dict)
    tool_version: str = __version__
    source: str = None

    def to_dict(self) -> dict:
        return {
            "points": self.points.to_dict(),
            "tau": self.tau,
            "tau_policy": self.tau_policy,
            "xi": self.xi,
            "d": self.d,
            "M": self.M,
            "seed": self.seed,
            "n": self.n,
            "T": self.T,
            "stage_timings": dict(self.stage_timings),
            "tool_version": self.tool_version,
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, d) -> "DetectionResult":
        return cls(
            points=ChangePointSet.from_dict(d["points"]),
            tau=d["tau"],
            d=d["d"],
            M=d["M"],
            seed=d["seed"],
            n=d["n"],
            T=d["T"],
            tau_policy=d.get("tau_policy", AUTO),
            xi=d.get("xi"),
            stage_timings=dict(d.get("stage_timings", {})),
            tool_version=d.get("tool_version", __version__),
            source=d.get("source"),
        )


def detect(series: AdjacencySeries, d: int = 10, M: int = 120, seed=0, tau=AUTO, xi=None):
    """Embed, score pairs, draw intervals, pick ``tau`` (if AUTO) and segment."""
    from .selection import default_xi, select_tau

    timings = {}
    clock = time.perf_counter()

    def lap(name):
        nonlocal clock
        now = time.perf_counter()
        timings[name] = now - clock
        clock = now

    latents = embed_series(series, d)
    lap("embed")
    Y = pair_scores(latents, pair_set(series.n))
    lap("pair_scores")
    intervals = draw_intervals(series.T, M, seed)
    lap("intervals")
    cache = {}
    if isinstance(tau, str):
        if tau.upper() != AUTO:
            raise InvalidInputError(f"tau must be a positive number or {AUTO!r}, got {tau!r}")
        xi = default_xi(Y.n_effective, Y.T) if xi is None else xi
        chosen = select_tau(Y, intervals, xi, cache=cache)
        lap("select_tau")
        tau_value, points, policy = chosen.tau, chosen.points, AUTO
    else:
        tau_value = float(tau)
        points = nonpar_rdpg_cpd(Y, intervals, tau_value, cache=cache)
        lap("segment")
        policy = "fixed"
    return DetectionResult(
        points=points,
        tau=float(tau_value),
        d=d,
        M=M,
        seed=int(seed),
        n=series.n,
        T=series.T,
        tau_policy=policy,
        xi=xi,
        stage_timings=timings,
    )
