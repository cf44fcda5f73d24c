import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdpg_cpd.errors import FormatError, InvalidInputError
from rdpg_cpd.io import (
    JSONL,
    MAGIC,
    PACKED,
    decode_packed,
    encode_packed,
    infer_format,
    ingest_timeseries,
    load_matrix,
    read_result,
    read_series,
    window_correlation,
    write_result,
    write_series,
)
from rdpg_cpd.segmentation import detect
from rdpg_cpd.series import AdjacencySeries

from conftest import random_series


@st.composite
def series(draw):
    T = draw(st.integers(1, 4))
    n = draw(st.integers(1, 9))
    E = n * (n - 1) // 2
    bits = draw(st.lists(st.integers(0, 1), min_size=T * E, max_size=T * E))
    return AdjacencySeries.from_upper_triangles(np.array(bits, dtype=np.uint8).reshape(T, E), n)


def test_empty_series_size():
    data = encode_packed(AdjacencySeries(np.zeros((2, 3, 3), dtype=np.uint8)))
    assert len(data) == 18
    assert data[:8] == MAGIC
    assert data[8:16] == (2).to_bytes(4, "little") + (3).to_bytes(4, "little")
    assert data[16:] == b"\x00\x00"


def test_single_edge_bit_layout():
    A = np.zeros((1, 3, 3), dtype=np.uint8)
    A[0, 0, 1] = A[0, 1, 0] = 1
    assert encode_packed(AdjacencySeries(A))[16] == 0x01
    # edge (2, 3) is the third upper-triangular entry
    B = np.zeros((1, 3, 3), dtype=np.uint8)
    B[0, 1, 2] = B[0, 2, 1] = 1
    assert encode_packed(AdjacencySeries(B))[16] == 0x04


@settings(max_examples=100, deadline=None)
@given(series())
def test_packed_round_trip(s):
    data = encode_packed(s)
    assert decode_packed(data) == s
    assert encode_packed(decode_packed(data)) == data


@settings(max_examples=50, deadline=None)
@given(series())
def test_jsonl_round_trip(tmp_path_factory, s):
    path = tmp_path_factory.mktemp("j") / "s.jsonl"
    write_series(s, path)
    first = path.read_bytes()
    back = read_series(path)
    assert back == s
    write_series(back, path)
    assert path.read_bytes() == first


@pytest.mark.parametrize("fmt", [PACKED, JSONL])
def test_file_round_trip(tmp_path, rng, fmt):
    s = random_series(rng, 5, 11)
    path = tmp_path / "s.dat"
    write_series(s, path, fmt)
    first = path.read_bytes()
    write_series(read_series(path, fmt), path, fmt)
    assert path.read_bytes() == first


def test_infer_format():
    assert infer_format("a.jsonl") == JSONL
    assert infer_format("a.ndjson") == JSONL
    assert infer_format("a.bin") == PACKED


class TestPackedErrors:
    def _good(self, rng):
        return encode_packed(random_series(rng, 3, 6))

    def test_bad_magic(self, rng):
        data = b"XDPGCPD1" + self._good(rng)[8:]
        with pytest.raises(FormatError, match="magic") as exc:
            decode_packed(data)
        assert exc.value.position == 0

    def test_truncated(self, rng):
        data = self._good(rng)
        with pytest.raises(FormatError, match="t=3"):
            decode_packed(data[:-1])
        with pytest.raises(FormatError, match="header"):
            decode_packed(data[:12])

    def test_trailing(self, rng):
        with pytest.raises(FormatError, match="trailing"):
            decode_packed(self._good(rng) + b"\x00")

    def test_padding_bits(self, rng):
        data = bytearray(self._good(rng))
        # n = 6: 15 edges, so bit 15 of each 2-byte block is padding
        data[16 + 2 + 1] |= 0x80
        with pytest.raises(FormatError, match="t=2"):
            decode_packed(bytes(data))

    def test_zero_shape(self):
        with pytest.raises(FormatError):
            decode_packed(MAGIC + (0).to_bytes(4, "little") + (3).to_bytes(4, "little"))

    def test_single_node(self):
        s = AdjacencySeries(np.zeros((3, 1, 1), dtype=np.uint8))
        assert decode_packed(encode_packed(s)) == s


class TestJsonlErrors:
    @pytest.mark.parametrize(
        "text,match",
        [
            ('{"t": 1, "edges": [[1, 2]]}\n{"t": 1, "edges": []}\n', "line 2"),
            ('{"t": 1, "edges": [[2, 1]]}\n', "line 1"),
            ('{"t": 1, "edges": [[1, 2]]}\nnot json\n', "line 2"),
            ('{"n": 2, "T": 1}\n{"t": 1, "edges": [[1, 3]]}\n', "line 2"),
            ('{"n": 3, "T": 1}\n{"t": 2, "edges": []}\n', "line 2"),
            ('{"t": 0, "edges": []}\n', "line 1"),
            ("[1, 2]\n", "line 1"),
            ('{"x": 1}\n', "line 1"),
        ],
    )
    def test_positions(self, tmp_path, text, match):
        path = tmp_path / "bad.jsonl"
        path.write_text(text)
        with pytest.raises(FormatError, match=match):
            read_series(path)

    def test_missing_snapshots_are_empty(self, tmp_path):
        path = tmp_path / "s.jsonl"
        path.write_text('{"t": 3, "edges": [[1, 4]]}\n')
        s = read_series(path)
        assert (s.T, s.n) == (3, 4)
        assert s.snapshots[:2].sum() == 0 and s.snapshots[2, 0, 3] == 1


def test_result_round_trip(tmp_path, rng):
    res = detect(random_series(rng, 15, 20), d=2, M=10, seed=4)
    res.source = "input.bin"
    path = tmp_path / "r.json"
    write_result(res, path)
    assert read_result(path).to_dict() == res.to_dict()


def test_read_result_rejects_other_json(tmp_path):
    path = tmp_path / "r.json"
    path.write_text(json.dumps({"hello": 1}))
    with pytest.raises(FormatError):
        read_result(path)


class TestIngest:
    def test_identical_and_negated_rows(self, rng):
        base = rng.standard_normal(40)
        Z = np.vstack([base, base, -base, rng.standard_normal(40)])
        s = ingest_timeseries(Z, 4, 0.7)
        assert s.T == 4
        assert np.all(s.snapshots[:, 0, 1] == 1)
        assert np.all(s.snapshots[:, 0, 2] == 0)

    def test_remainder_dropped_and_shape(self, rng):
        Z = rng.standard_normal((7, 103))
        s = ingest_timeseries(Z, 10, 0.5)
        assert (s.T, s.n) == (10, 7)
        assert s == ingest_timeseries(Z[:, :100], 10, 0.5)

    def test_zebrafish_shape(self):
        Z = np.random.default_rng(0).standard_normal((120, 5000)).astype(np.float32)
        s = ingest_timeseries(Z, 100, 0.7)
        assert (s.T, s.n) == (100, 120)

    def test_window_correlation_matches_numpy(self, rng):
        Z = rng.standard_normal((6, 30))
        np.testing.assert_allclose(window_correlation(Z), np.corrcoef(Z), atol=1e-12)

    def test_constant_row(self, rng):
        Z = np.vstack([np.full(20, 3.3), rng.standard_normal(20), rng.standard_normal(20)])
        R = window_correlation(Z)
        assert R[0, 0] == 0.0 and np.all(R[0, 1:] == 0.0)
        # correlation 0 clears a threshold only when the threshold is negative
        assert ingest_timeseries(Z, 2, 0.0).snapshots[:, 0, :].sum() == 0
        assert np.all(ingest_timeseries(Z, 2, -0.5).snapshots[:, 0, 1:] == 1)

    def test_subsample_deterministic(self, rng):
        Z = rng.standard_normal((30, 60))
        a = ingest_timeseries(Z, 3, 0.2, subsample=10, seed=5)
        b = ingest_timeseries(Z, 3, 0.2, subsample=10, seed=5)
        assert a == b and a.n == 10

    @pytest.mark.parametrize(
        "kwargs",
        [dict(bins=50), dict(bins=0), dict(bins=2, threshold=1.0), dict(bins=2, subsample=1), dict(bins=2, subsample=99)],
    )
    def test_errors(self, rng, kwargs):
        kwargs.setdefault("threshold", 0.5)
        with pytest.raises(InvalidInputError):
            ingest_timeseries(rng.standard_normal((5, 40)), **kwargs)

    def test_load_matrix(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("1,2,3\n4,5,6\n")
        np.testing.assert_array_equal(load_matrix(p), [[1, 2, 3], [4, 5, 6]])
        q = tmp_path / "m.txt"
        q.write_text("1 2\n3 x\n")
        with pytest.raises(FormatError, match="line 2"):
            load_matrix(q)
