import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdpg_cpd.cusum import (
    PairSeries,
    cusum_at,
    cusum_profile,
    cusum_sup,
    cusum_weights,
    max_cusum,
    pair_scores,
    pair_set,
)
from rdpg_cpd.errors import InvalidInputError, InvalidIntervalError
from rdpg_cpd.spectral import LatentSeries

from conftest import shifted_pairs


def oracle_at(y, s, t, e, z):
    """Loop-based evaluation of the CUSUM display."""
    T, m = y.shape
    n = 2 * m
    left = sum(1 for k in range(s, t) for j in range(m) if y[k, j] <= z)
    right = sum(1 for k in range(t, e) for j in range(m) if y[k, j] <= z)
    wl = math.sqrt(2 * (e - t) / (n * (e - s) * (t - s)))
    wr = math.sqrt(2 * (t - s) / (n * (e - s) * (e - t)))
    return abs(wl * left - wr * right)


@st.composite
def pair_series(draw, max_T=8, max_m=4):
    T = draw(st.integers(2, max_T))
    m = draw(st.integers(1, max_m))
    vals = draw(st.lists(st.integers(0, 10), min_size=T * m, max_size=T * m))
    return PairSeries(np.array(vals, dtype=float).reshape(T, m) / 10)


@st.composite
def series_and_triple(draw):
    Y = draw(pair_series())
    s = draw(st.integers(0, Y.T - 2))
    e = draw(st.integers(s + 2, Y.T))
    t = draw(st.integers(s + 1, e - 1))
    return Y, s, t, e


@pytest.mark.parametrize(
    "n,pairs",
    [(4, [(1, 3), (2, 4)]), (5, [(1, 3), (2, 4)]), (2, [(1, 2)]), (7, [(1, 4), (2, 5), (3, 6)])],
)
def test_pair_set(n, pairs):
    O = pair_set(n)
    assert O.pairs == pairs
    assert O.n_effective == n - n % 2
    flat = [i for p in O.pairs for i in p]
    assert len(flat) == len(set(flat))


def test_pair_set_too_small():
    with pytest.raises(InvalidInputError):
        pair_set(1)


def test_pair_scores_unit_rows():
    X = np.zeros((3, 4, 2))
    X[..., 0] = 1.0
    np.testing.assert_array_equal(pair_scores(LatentSeries(X), pair_set(4)).scores, 1.0)


def test_pair_scores_hand_dot():
    X = np.array([[[0.6, 0.8], [0.8, 0.6]]])
    assert pair_scores(LatentSeries(X), pair_set(2)).scores[0, 0] == pytest.approx(0.96, abs=1e-15)


def test_pair_scores_rotation_invariant(rng):
    X = rng.standard_normal((5, 10, 3))
    W, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    a = pair_scores(LatentSeries(X), pair_set(10)).scores
    b = pair_scores(LatentSeries(X @ W), pair_set(10)).scores
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_pair_scores_bad_index():
    with pytest.raises(InvalidInputError):
        pair_scores(LatentSeries(np.zeros((1, 4, 1))), pair_set(6))


def test_cusum_at_hand_value():
    Y = PairSeries(np.array([[0.2], [0.8]]))
    assert cusum_at(Y, 0, 1, 2, 0.5) == pytest.approx(1 / math.sqrt(2), abs=1e-15)


def test_cusum_at_constant_and_below():
    Y = PairSeries(np.tile([0.1, 0.4, 0.7], (6, 1)))
    for z in (-1.0, 0.1, 0.5, 2.0):
        assert cusum_at(Y, 0, 3, 6, z) == pytest.approx(0.0, abs=1e-15)
    Y = PairSeries(np.arange(12.0).reshape(6, 2))
    assert cusum_at(Y, 1, 3, 5, -1.0) == 0.0


def test_cusum_at_bad_triple():
    Y = PairSeries(np.zeros((4, 1)))
    for s, t, e in [(1, 1, 3), (0, 3, 3), (0, 2, 5), (-1, 1, 2)]:
        with pytest.raises(InvalidInputError):
            cusum_at(Y, s, t, e, 0.0)


def test_cusum_sup_hand_value():
    v = cusum_sup(PairSeries(np.array([[0.2], [0.8]])), 0, 1, 2)
    assert v.value == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert 0.2 <= v.argmax_z < 0.8


def test_cusum_sup_disjoint_segments():
    # L snapshots of 0.2 then L of 0.8: at z=0.2 left counts L*m, right none,
    # so the value is w_L * L * m = sqrt(m * L / 2)
    L, m = 5, 3
    v = cusum_sup(shifted_pairs(2 * L, m, L), 0, L, 2 * L)
    assert v.value == pytest.approx(math.sqrt(m * L / 2), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(series_and_triple())
def test_cusum_at_matches_loop_oracle(args):
    Y, s, t, e = args
    for z in np.unique(Y.scores):
        assert cusum_at(Y, s, t, e, z) == pytest.approx(oracle_at(Y.scores, s, t, e, z), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(series_and_triple())
def test_sup_exact_and_bounded(args):
    Y, s, t, e = args
    v = cusum_sup(Y, s, t, e)
    grid = np.linspace(-0.05, 1.05, 2001)
    dense = max(oracle_at(Y.scores, s, t, e, z) for z in grid[::10])
    assert dense <= v.value + 1e-12
    assert v.value == pytest.approx(max(cusum_at(Y, s, t, e, z) for z in np.unique(Y.scores[s:e])), abs=1e-12)
    assert 0.0 <= v.value <= math.sqrt(2 * Y.m * (t - s) * (e - t) / (e - s)) + 1e-12
    assert cusum_at(Y, s, t, e, v.argmax_z) == pytest.approx(v.value, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 50), st.integers(1, 50), st.integers(1, 50), st.integers(1, 500))
def test_weight_identity(s, a, b, m):
    t, e = s + a, s + a + b
    wl, wr = cusum_weights(s, t, e, 2 * m)
    assert abs((t - s) * m * wl**2 + (e - t) * m * wr**2 - 1.0) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(series_and_triple())
def test_time_reversal(args):
    Y, s, t, e = args
    R = PairSeries(Y.scores[::-1])
    T = Y.T
    # (s, e] maps to (T - e, T - s]; split t maps to T - t
    assert cusum_sup(R, T - e, T - t, T - s).value == pytest.approx(cusum_sup(Y, s, t, e).value, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(series_and_triple(), st.randoms(use_true_random=False))
def test_pair_permutation_invariance(args, rnd):
    Y, s, t, e = args
    perm = list(range(Y.m))
    rnd.shuffle(perm)
    P = PairSeries(Y.scores[:, perm])
    assert cusum_sup(P, s, t, e).value == pytest.approx(cusum_sup(Y, s, t, e).value, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(pair_series(max_T=10))
def test_profile_matches_pointwise_sup(Y):
    prof = cusum_profile(Y, 0, Y.T)
    expect = [cusum_sup(Y, 0, t, Y.T).value for t in range(1, Y.T)]
    np.testing.assert_allclose(prof, expect, atol=1e-12)


def test_max_cusum_constant_tie_rule():
    assert max_cusum(PairSeries(np.full((6, 2), 0.3)), 1, 5) == (2, 0.0)


def test_max_cusum_shift():
    Y = shifted_pairs(20, 4, 12)
    b, a = max_cusum(Y, 0, 20)
    assert b == 12 and a > 0


def test_max_cusum_single_candidate():
    b, _ = max_cusum(PairSeries(np.arange(10.0).reshape(5, 2)), 2, 4)
    assert b == 3


@pytest.mark.parametrize("s,e", [(2, 3), (3, 3)])
def test_max_cusum_short_interval(s, e):
    with pytest.raises(InvalidIntervalError):
        max_cusum(PairSeries(np.zeros((5, 1))), s, e)


def test_pair_series_validation():
    with pytest.raises(InvalidInputError):
        PairSeries(np.array([[np.nan]]))
    with pytest.raises(InvalidInputError):
        PairSeries(np.zeros(3))
