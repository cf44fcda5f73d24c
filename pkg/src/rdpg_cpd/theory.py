"""Exact computations on finite-support latent laws.

These back the identifiability and population-CUSUM checks: graph laws are
enumerated exactly for tiny networks, and population CUSUM values are built
from exact inner-product CDFs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .cusum import pair_set
from .errors import InvalidDimensionError, InvalidInputError, InvalidIntervalError, ResourceLimitError
from .laws import DiscreteLatentLaw
from .spectral import scaled_pca

MAX_GRAPH_NODES = 5
MAX_ASSIGNMENTS = 10**6
# contribution entries materialised per enumeration chunk
_CHUNK_ENTRIES = 2**18


@dataclass(frozen=True, eq=False)
class GraphLaw:
    """Exact joint law of the edge indicators of an ``n``-node network.

    ``probs[k]`` is the probability of pattern ``k``: bit ``e`` of ``k`` (least
    significant first) is the indicator of the ``e``-th upper-triangular edge
    in row-major order.
    """

    n: int
    probs: np.ndarray

    def __post_init__(self):
        E = self.n * (self.n - 1) // 2
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (2**E,):
            raise InvalidInputError(f"expected {2**E} pattern probabilities, got {p.shape}")
        if abs(math.fsum(p) - 1.0) > 1e-10:
            raise InvalidInputError(f"pattern probabilities sum to {math.fsum(p)!r}")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def edges(self):
        return list(itertools.combinations(range(self.n), 2))

    @property
    def probabilities(self) -> dict:
        """Mapping from bit tuples (one per edge) to probabilities."""
        E = len(self.edges)
        return {tuple((k >> b) & 1 for b in range(E)): float(v) for k, v in enumerate(self.probs)}

    def probability(self, pattern) -> float:
        k = sum(int(bit) << b for b, bit in enumerate(pattern))
        return float(self.probs[k])

    def total_variation(self, other: "GraphLaw") -> float:
        if other.n != self.n:
            raise InvalidInputError("graph laws on different node counts")
        return 0.5 * math.fsum(np.abs(self.probs - other.probs))


def _pattern_bits(E):
    k = np.arange(2**E)
    return ((k[:, None] >> np.arange(E)) & 1).astype(bool)


def brute_force_graph_law(F: DiscreteLatentLaw, n: int) -> GraphLaw:
    """Enumerate every atom assignment to compute ``P{A = v}`` for all patterns.

    Sums ``prod_i prob(x_i) * prod_{i<j} p_ij^v_ij (1 - p_ij)^(1 - v_ij)`` with
    ``p_ij = x_i^T x_j`` over all assignments ``(x_1, ..., x_n)``. Partial sums
    are combined with ``math.fsum``.
    """
    if not 1 <= n <= MAX_GRAPH_NODES:
        raise ResourceLimitError(f"exact enumeration supports 1 <= n <= {MAX_GRAPH_NODES}, got {n}")
    k = len(F.probs)
    if k**n > MAX_ASSIGNMENTS:
        raise ResourceLimitError(f"{k}^{n} atom assignments exceed the limit of {MAX_ASSIGNMENTS}")
    E = n * (n - 1) // 2
    bits = _pattern_bits(E)
    gram = F.points @ F.points.T
    iu, ju = (np.array(a, dtype=int) for a in zip(*itertools.combinations(range(n), 2))) if E else (
        np.zeros(0, int), np.zeros(0, int))

    assignments = np.array(list(itertools.product(range(k), repeat=n)), dtype=int).reshape(-1, n)
    chunk = max(1, _CHUNK_ENTRIES // (bits.shape[0] * max(E, 1)))
    partial = [[] for _ in range(bits.shape[0])]
    for lo in range(0, len(assignments), chunk):
        idx = assignments[lo : lo + chunk]
        weight = np.prod(F.probs[idx], axis=1)
        p = gram[idx[:, iu], idx[:, ju]]
        terms = np.where(bits[None, :, :], p[:, None, :], 1.0 - p[:, None, :])
        contrib = weight[:, None] * np.prod(terms, axis=2)
        for v in range(bits.shape[0]):
            partial[v].append(math.fsum(contrib[:, v]))
    return GraphLaw(n, np.array([math.fsum(ps) for ps in partial]))


def moment_vector(F: DiscreteLatentLaw, k_max: int):
    """Exact moments ``E[X^k]``, ``k = 1..k_max``, of a one-dimensional law."""
    if F.d != 1:
        raise InvalidDimensionError(f"moment_vector needs d = 1, got d = {F.d}")
    x = F.points[:, 0]
    return tuple(math.fsum(F.probs * x**k) for k in range(1, k_max + 1))


def ks_distance(F: DiscreteLatentLaw, G: DiscreteLatentLaw) -> float:
    """``sup_z |G_F(z) - G_G(z)|`` between the inner-product laws of ``F`` and ``G``.

    Both CDFs are step functions jumping only at atom-pair inner products, so
    the supremum is attained on the union of those values.
    """
    z = np.union1d(F.inner_product_law()[0], G.inner_product_law()[0])
    return float(np.max(np.abs(F.inner_product_cdf(z) - G.inner_product_cdf(z))))


def _cdf(law):
    if isinstance(law, DiscreteLatentLaw):
        return law.inner_product_cdf
    if callable(law):
        return law
    raise InvalidInputError("each law must be a DiscreteLatentLaw or a CDF callable")


def population_cusum(laws, s: int, t: int, e: int, z, n: int):
    """Population CUSUM ``D~^t_{s,e}(z)`` with ``E 1{Y_k <= z} = G_k(z)``.

    ``laws[k - 1]`` gives ``G_k`` for snapshot ``k``. With ``n / 2`` pairs per
    snapshot the expected counts are ``(n / 2) sum_k G_k(z)``. Vectorised over ``z``.
    """
    T = len(laws)
    if not (0 <= s < t < e <= T):
        raise InvalidIntervalError(f"need 0 <= s < t < e <= T={T}, got ({s}, {t}, {e})")
    z = np.asarray(z, dtype=float)
    G = np.array([_cdf(laws[k])(z) for k in range(s, e)])
    m = n / 2.0
    w_left = math.sqrt(2.0 * (e - t) / (n * (e - s) * (t - s)))
    w_right = math.sqrt(2.0 * (t - s) / (n * (e - s) * (e - t)))
    left = m * G[: t - s].sum(axis=0)
    right = m * G[t - s :].sum(axis=0)
    out = np.abs(w_left * left - w_right * right)
    return float(out) if out.ndim == 0 else out


def support_grid(laws) -> np.ndarray:
    """Union of inner-product support points; exact ``sup_z`` evaluation grid."""
    return np.unique(np.concatenate([law.inner_product_law()[0] for law in laws]))


def population_cusum_sup(laws, s: int, t: int, e: int, n: int) -> float:
    return float(np.max(population_cusum(laws, s, t, e, support_grid(laws[s:e]), n)))


def population_argmax(laws, s: int, e: int, n: int):
    """``(t, value)`` maximising ``sup_z D~^t_{s,e}``; smallest ``t`` on ties."""
    vals = [population_cusum_sup(laws, s, t, e, n) for t in range(s + 1, e)]
    k = int(np.argmax(vals))
    return s + 1 + k, vals[k]


def single_change_bound(kappa: float, s: int, eta: int, e: int, n: int) -> float:
    """Upper bound ``kappa sqrt(n/2) min(sqrt(eta - s), sqrt(e - eta))``."""
    return kappa * math.sqrt(n / 2.0) * min(math.sqrt(eta - s), math.sqrt(e - eta))


def lower_bound(kappa: float, c1: float, delta: float, s: int, e: int, n: int) -> float:
    """Lower bound ``2^{-3/2} c1 kappa delta sqrt(n) / sqrt(e - s)`` on ``max_t D~``."""
    return 2.0**-1.5 * c1 * kappa * delta * math.sqrt(n) / math.sqrt(e - s)


def is_monotone_or_valley(values, tol: float = 1e-12) -> bool:
    """True if the sequence is monotone, or decreases and then increases."""
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        return True
    dv = np.diff(v)
    down = dv < -tol
    up = dv > tol
    if not down.any() or not up.any():
        return True
    # every decrease must come before every increase
    return int(np.nonzero(down)[0].max()) < int(np.nonzero(up)[0].min())


@dataclass(frozen=True)
class TwoNetworkResult:
    decision: str
    statistic: float
    threshold: float


def two_network_test(A, A_tilde, d: int) -> TwoNetworkResult:
    """Decide whether two networks come from different latent laws.

    Both are embedded with :func:`scaled_pca`; the statistic is
    ``sup_z sqrt(2/n) |sum_O (1{Y <= z} - 1{Y~ <= z})|`` on the shared pair set
    and the networks are declared different when it exceeds ``2 sqrt(log n)``.
    """
    A = np.asarray(A)
    A_tilde = np.asarray(A_tilde)
    if A.shape != A_tilde.shape:
        raise InvalidInputError(f"networks differ in shape: {A.shape} vs {A_tilde.shape}")
    O = pair_set(A.shape[0])
    left, right = list(O.left), list(O.right)
    X = scaled_pca(A, d)
    Xt = scaled_pca(A_tilde, d)
    y = np.sort(np.einsum("kd,kd->k", X[left], X[right]))
    yt = np.sort(np.einsum("kd,kd->k", Xt[left], Xt[right]))
    z = np.union1d(y, yt)
    diff = np.searchsorted(y, z, side="right") - np.searchsorted(yt, z, side="right")
    n = O.n_effective
    stat = math.sqrt(2.0 / n) * float(np.max(np.abs(diff)))
    threshold = 2.0 * math.sqrt(math.log(n))
    return TwoNetworkResult("different" if stat > threshold else "same", stat, threshold)


# -- desk-scale suite -------------------------------------------------------------

MOMENT_MATCHED = (
    ((0.3, 0.5), (0.7, 0.5)),
    ((0.2, 2 / 9), (0.5, 5 / 9), (0.8, 2 / 9)),
)
# same mean and variance as MOMENT_MATCHED[0], third moment 0.197 instead of 0.185
THIRD_MOMENT_MISMATCH = ((0.4, 0.8), (0.9, 0.2))


def random_single_change_instance(rng, n: int = 100):
    """Random one-dimensional laws with one change after ``eta`` in ``(0, T]``."""
    T = int(rng.integers(6, 31))
    eta = int(rng.integers(1, T))
    laws = []
    for _ in range(2):
        k = int(rng.integers(1, 4))
        pts = rng.uniform(0.05, 1.0, size=k)
        w = rng.uniform(0.2, 1.0, size=k)
        laws.append(DiscreteLatentLaw(points=pts, probs=w / w.sum()))
    if ks_distance(*laws) == 0.0:
        return random_single_change_instance(rng, n)
    return [laws[0]] * eta + [laws[1]] * (T - eta), eta, ks_distance(*laws)


def run_theory_checks(seed=0, trials: int = 100, instances: int = 50):
    """Run the exact-law and population-CUSUM checks; returns ``(name, passed, detail)`` rows."""
    from .rng import make_rng

    out = []
    F, G = (DiscreteLatentLaw(list(a)) for a in MOMENT_MATCHED)
    H = DiscreteLatentLaw(list(THIRD_MOMENT_MISMATCH))
    gap = max(np.max(np.abs(brute_force_graph_law(F, n).probs - brute_force_graph_law(G, n).probs))
              for n in (3, 4))
    out.append(("moment-matched laws give equal graph laws (n=3,4)", gap <= 1e-12, f"max gap {gap:.2e}"))
    tv = brute_force_graph_law(F, 4).total_variation(brute_force_graph_law(H, 4))
    out.append(("third-moment mismatch separates graph laws (n=4)", tv > 1e-6, f"TV {tv:.3e}"))

    rng = make_rng(seed, "population-cusum")
    n = 100
    argmax_ok = bound_ok = 0
    for _ in range(instances):
        laws, eta, kappa = random_single_change_instance(rng, n)
        T = len(laws)
        b, _ = population_argmax(laws, 0, T, n)
        argmax_ok += b == eta
        bound_ok += population_cusum_sup(laws, 0, eta, T, n) <= single_change_bound(kappa, 0, eta, T, n) + 1e-9
    out.append(("population CUSUM argmax at the change", argmax_ok == instances, f"{argmax_ok}/{instances}"))
    out.append(("population CUSUM upper bound", bound_ok == instances, f"{bound_ok}/{instances}"))

    rng = make_rng(seed, "two-network")
    null_law = DiscreteLatentLaw([(math.sqrt(0.2), 1.0)])
    p = math.sqrt(0.1)
    alt_law = DiscreteLatentLaw([(math.sqrt(0.1), p), (math.sqrt(0.8), 1.0 - p)])
    nn = 400

    def draw(law):
        X = law.sample(rng, nn)
        A = np.triu(rng.random((nn, nn)) < X @ X.T, 1).astype(np.uint8)
        return A + A.T

    null_hits = sum(two_network_test(draw(null_law), draw(null_law), 1).decision == "different"
                    for _ in range(trials))
    alt_hits = sum(two_network_test(draw(null_law), draw(alt_law), 1).decision == "different"
                   for _ in range(trials))
    out.append(("two-network test size under the null", null_hits <= 0.05 * trials,
                f"{null_hits}/{trials} declared different"))
    out.append(("two-network test power (kappa0 = 0.9, n = 400)", alt_hits >= 0.95 * trials,
                f"{alt_hits}/{trials} declared different"))
    return out
