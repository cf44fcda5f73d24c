"""Localisation metrics, a mean-CUSUM baseline and the Monte-Carlo benchmark."""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InvalidInputError
from .rng import make_rng
from .segmentation import _wbs, detect, draw_intervals
from .series import AdjacencySeries, ChangePointSet
from .simulate import generate

log = logging.getLogger(__name__)

METHOD_RDPG = "nonpar-rdpg-cpd"
METHOD_MEAN = "mean-cusum"
METHODS = (METHOD_RDPG, METHOD_MEAN)


def _as_points(x):
    if isinstance(x, ChangePointSet):
        return list(x.points)
    return [int(p) for p in x]


def hausdorff_one_sided(A, B) -> float:
    """``d(A | B) = max_{b in B} min_{a in A} |a - b|``.

    Empty ``B`` gives ``-inf`` (max over nothing); empty ``A`` with non-empty
    ``B`` gives ``+inf``.

    >>> hausdorff_one_sided([48, 105], [50, 100])
    5.0
    """
    A, B = _as_points(A), _as_points(B)
    if not B:
        return -math.inf
    if not A:
        return math.inf
    a = np.asarray(A)
    return float(max(np.min(np.abs(a - b)) for b in B))


def abs_k_error(est, truth) -> int:
    return abs(len(_as_points(est)) - len(_as_points(truth)))


def extended_median(values) -> float:
    """Median on the extended reals.

    With an even count, the two middle values are averaged only if both are
    finite; otherwise the lower middle order statistic is reported.
    """
    v = sorted(float(x) for x in values)
    if not v:
        return math.nan
    k = len(v)
    if k % 2:
        return v[k // 2]
    lo, hi = v[k // 2 - 1], v[k // 2]
    if math.isfinite(lo) and math.isfinite(hi):
        return (lo + hi) / 2.0
    return lo


# -- mean-CUSUM baseline ----------------------------------------------------


class _MeanCusum:
    """Frobenius norm of the standard CUSUM of vectorised adjacency matrices.

    With ``S_k`` the cumulative sum of the first ``k`` vectorised snapshots,
    every inner product between differences of ``S`` is a combination of
    entries of the Gram matrix ``G = S S^T``, so each split costs O(1) after
    one ``O(T^2 n^2)`` product.
    """

    def __init__(self, series: AdjacencySeries):
        V = series.upper_triangles().astype(np.float32)
        # entries are integer counts below 2**24, so float32 products are exact
        H = (V @ V.T).astype(np.float64)
        G = np.zeros((series.T + 1, series.T + 1))
        G[1:, 1:] = np.cumsum(np.cumsum(H, axis=0), axis=1)
        self.H = H
        self.G = G
        self.T = series.T

    def _dot(self, p, q, r, u):
        G = self.G
        return G[p, r] - G[p, u] - G[q, r] + G[q, u]

    def profile(self, s, e):
        t = np.arange(s + 1, e)
        w_left = np.sqrt((e - t) / ((e - s) * (t - s)))
        w_right = np.sqrt((t - s) / ((e - s) * (e - t)))
        aa = self._dot(t, s, t, s)
        bb = self._dot(e, t, e, t)
        ab = self._dot(t, s, e, t)
        # factor 2: full symmetric matrix, both triangles
        sq = 2.0 * (w_left**2 * aa + w_right**2 * bb - 2.0 * w_left * w_right * ab)
        return np.sqrt(np.maximum(sq, 0.0))

    def split(self, s, e):
        prof = self.profile(s, e)
        k = int(np.argmax(prof))
        return s + 1 + k, float(prof[k])


def _noise_floor(H):
    """Null mean and spread of the statistic from disjoint snapshot differences.

    ``D_k = V_{2k+1} - V_{2k}`` has covariance ``2 Sigma`` when no change
    separates the two snapshots, so ``tr Sigma`` and ``tr Sigma^2`` follow from
    ``|D_k|^2`` and ``(D_k . D_l)^2``, ``k != l``. Entries sharing a node are
    correlated, which an entrywise Bernoulli variance would miss.
    """
    T = H.shape[0]
    odd = np.arange(1, T - T % 2, 2)
    even = odd - 1
    DD = H[np.ix_(odd, odd)] - H[np.ix_(odd, even)] - H[np.ix_(even, odd)] + H[np.ix_(even, even)]
    k = DD.shape[0]
    tr1 = float(np.mean(np.diag(DD))) / 2.0
    if k < 2:
        return tr1, 0.0
    off = DD[~np.eye(k, dtype=bool)]
    tr2 = float(np.mean(off**2)) / 4.0
    return tr1, tr2


# null standard deviations of the statistic added to the noise floor
MEAN_TAU_MARGIN = 4.0
# snapshots per block when estimating the local noise floor
_FLOOR_BLOCK = 24


def _block_floors(H, block=_FLOOR_BLOCK):
    T = H.shape[0]
    if T < 2 * block:
        return [_noise_floor(H)[0]]
    out = []
    starts = list(range(0, T - block + 1, block))
    for k, a in enumerate(starts):
        b = T if k == len(starts) - 1 else a + block
        out.append(_noise_floor(H[a:b, a:b])[0])
    return out


def mean_cusum_tau(series: AdjacencySeries, _stat=None) -> float:
    """Default threshold: largest local null level of the statistic plus a margin.

    Under a constant mean the squared statistic (upper triangle) has mean
    ``tr Sigma`` and variance about ``2 tr Sigma^2``, so the statistic sits
    near ``sqrt(tr Sigma)`` with spread ``sqrt(2 tr Sigma^2) / (2 sqrt(tr Sigma))``.
    Segments can differ in noise level, so ``tr Sigma`` is estimated on
    blocks of snapshots and the largest is used. The threshold adds
    ``MEAN_TAU_MARGIN`` spreads and is scaled by ``sqrt(2)`` for the full
    symmetric matrix.
    """
    stat = _MeanCusum(series) if _stat is None else _stat
    if series.T < 2:
        return 1.0
    tr1, tr2 = _noise_floor(stat.H)
    if tr1 <= 0:
        return 1.0
    floor = math.sqrt(max(_block_floors(stat.H)))
    spread = math.sqrt(2.0 * tr2) / (2.0 * math.sqrt(tr1))
    return math.sqrt(2.0) * (floor + MEAN_TAU_MARGIN * spread)


def mean_cusum_detect(series: AdjacencySeries, intervals, tau=None) -> ChangePointSet:
    """Wild binary segmentation driven by the mean-CUSUM statistic.

    Same recursion and conventions as the KS-CUSUM detector. ``tau=None``
    uses :func:`mean_cusum_tau`.
    """
    stat = _MeanCusum(series)
    tau = mean_cusum_tau(series, stat) if tau is None else float(tau)
    cache = {}

    def split(sm, em):
        key = (sm, em)
        if key not in cache:
            cache[key] = stat.split(sm, em)
        return cache[key]

    return _wbs(series.T, tuple(intervals), tau, 0, series.T, split)


# -- benchmark ----------------------------------------------------------------


@dataclass
class EvalRecord:
    method: str
    scenario: str
    params: dict
    n: int
    T: int
    trials: int
    mean_abs_K_error: float
    median_d_est_given_true: float
    median_d_true_given_est: float
    runtime_seconds: float = 0.0
    failures: int = 0
    per_trial: list = field(default_factory=list)

    def to_dict(self, timings: bool = True) -> dict:
        d = asdict(self)
        for key in ("median_d_est_given_true", "median_d_true_given_est", "mean_abs_K_error"):
            d[key] = encode_extended(d[key])
        d["per_trial"] = [
            {k: encode_extended(v) for k, v in tr.items() if timings or k != "runtime_seconds"}
            for tr in self.per_trial
        ]
        if not timings:
            d.pop("runtime_seconds")
        return d


def encode_extended(x):
    """JSON-safe encoding of extended reals: infinities become ``"inf"`` / ``"-inf"``
    and NaN (no successful trial) becomes ``None``."""
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if isinstance(x, float) and math.isnan(x):
        return None
    return x


def decode_extended(x):
    if x is None:
        return math.nan
    if x in ("inf", "-inf"):
        return float(x)
    return x


def _cell_name(cell):
    return f"scenario{cell['scenario']}"


def _cell_params(cell):
    sc = int(cell["scenario"])
    out = {}
    if sc == 1:
        out["rho"] = float(cell.get("rho", 0.0))
    if sc in (2, 4):
        out["eps"] = float(cell.get("eps", 0.3))
    return out


def _derived_seed(seed, *stream) -> int:
    return int(make_rng(seed, *stream).integers(0, 2**63 - 1))


def run_trial(cell: dict, method: str, seed: int, trial: int, cell_index: int, d=10, M=120) -> dict:
    """One (cell, method, trial) evaluation; exceptions are recorded, not raised."""
    data_seed = _derived_seed(seed, "data", cell_index, trial)
    method_seed = _derived_seed(seed, "method", cell_index, trial)
    start = time.perf_counter()
    try:
        labeled = generate(cell["scenario"], int(cell["n"]), data_seed, **_cell_params(cell))
        truth = labeled.truth
        if method == METHOD_RDPG:
            est = detect(labeled.series, d=d, M=M, seed=method_seed).points
        elif method == METHOD_MEAN:
            intervals = draw_intervals(labeled.series.T, M, method_seed)
            est = mean_cusum_detect(labeled.series, intervals, cell.get("mean_tau"))
        else:
            raise InvalidInputError(f"unknown method {method!r}")
    except Exception as exc:  # recorded per trial
        log.warning("trial %d of %s/%s failed: %s", trial, _cell_name(cell), method, exc)
        return {"trial": trial, "error": f"{type(exc).__name__}: {exc}",
                "runtime_seconds": time.perf_counter() - start}
    return {
        "trial": trial,
        "points": list(est.points),
        "abs_K_error": abs_k_error(est, truth),
        "d_est_given_true": hausdorff_one_sided(est, truth),
        "d_true_given_est": hausdorff_one_sided(truth, est),
        "runtime_seconds": time.perf_counter() - start,
    }


def aggregate(method, cell, trials_out, T=150) -> EvalRecord:
    ok = [t for t in trials_out if "error" not in t]
    return EvalRecord(
        method=method,
        scenario=_cell_name(cell),
        params=_cell_params(cell),
        n=int(cell["n"]),
        T=T,
        trials=len(trials_out),
        mean_abs_K_error=float(np.mean([t["abs_K_error"] for t in ok])) if ok else math.nan,
        median_d_est_given_true=extended_median([t["d_est_given_true"] for t in ok]),
        median_d_true_given_est=extended_median([t["d_true_given_est"] for t in ok]),
        runtime_seconds=float(sum(t["runtime_seconds"] for t in trials_out)),
        failures=len(trials_out) - len(ok),
        per_trial=sorted(trials_out, key=lambda t: t["trial"]),
    )


def _run_task(args):
    return run_trial(*args)


def benchmark(plan: dict, seed: int, trials=None, n_jobs: int = 1):
    """Run every (cell, method) of ``plan`` for ``trials`` trials.

    ``plan`` is a mapping with ``cells`` (each ``{"scenario", "n", ...}``,
    optionally with its own ``methods``), optional ``methods`` (default:
    both), ``trials``, ``d`` and ``M``. Trial
    ``k`` of cell ``c`` draws its data from the stream ``(seed, "data", c, k)``,
    shared by all methods, so records do not depend on ``n_jobs``.
    """
    cells = plan.get("cells")
    if not cells:
        raise InvalidInputError("plan has no cells")
    methods = plan.get("methods", list(METHODS))
    trials = int(plan.get("trials", 25) if trials is None else trials)
    if trials < 1:
        raise InvalidInputError(f"trials must be >= 1, got {trials}")
    d = int(plan.get("d", 10))
    M = int(plan.get("M", 120))

    cell_methods = [list(cell.get("methods", methods)) for cell in cells]
    tasks = [
        (cell, method, seed, k, c, d, M)
        for c, cell in enumerate(cells)
        for method in cell_methods[c]
        for k in range(trials)
    ]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]

    records = []
    i = 0
    for cell, cm in zip(cells, cell_methods):
        for method in cm:
            records.append(aggregate(method, cell, results[i : i + trials]))
            i += trials
    return records


def _fmt(x):
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.2f}"
    return str(x)


_COLUMNS = ("method", "scenario", "params", "n", "trials", "|K-K^|", "d(C^|C)", "d(C|C^)", "failures")


def _row(r: EvalRecord):
    params = ",".join(f"{k}={v:g}" for k, v in r.params.items()) or "-"
    return (r.method, r.scenario, params, r.n, r.trials, r.mean_abs_K_error,
            r.median_d_est_given_true, r.median_d_true_given_est, r.failures)


def format_table(records) -> str:
    """Aligned text table of benchmark records."""
    rows = [list(_COLUMNS)] + [[_fmt(x) for x in _row(r)] for r in records]
    widths = [max(len(row[i]) for row in rows) for i in range(len(_COLUMNS))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in rows)


def format_csv(records) -> str:
    import csv
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_COLUMNS)
    for r in records:
        writer.writerow([_fmt(x) for x in _row(r)])
    return buf.getvalue()


def records_to_json(records, timings: bool = True) -> str:
    return json.dumps([r.to_dict(timings) for r in records], indent=2, sort_keys=True)
