"""Series file formats, result persistence and time-series ingestion.

Packed binary layout::

    b"RDPGCPD1" | T (u32 LE) | n (u32 LE) | T blocks of ceil(n(n-1)/2 / 8) bytes

Each block is the upper triangle (row-major, ``i < j``) packed LSB-first.
Edge-jsonl holds one object per line, ``{"t": 1, "edges": [[1, 2], ...]}``,
with 1-based indices; an optional header line ``{"n": .., "T": ..}`` fixes the
shape when trailing nodes or snapshots are empty.
"""

from __future__ import annotations

import json
import math
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidInputError
from .rng import make_rng
from .segmentation import DetectionResult
from .series import AdjacencySeries

MAGIC = b"RDPGCPD1"
_HEADER = struct.Struct("<II")
PACKED = "packed-binary"
JSONL = "edge-jsonl"
FORMATS = (PACKED, JSONL)


def infer_format(path) -> str:
    return JSONL if str(path).endswith((".jsonl", ".ndjson")) else PACKED


def _block_size(n):
    return math.ceil(n * (n - 1) // 2 / 8)


def encode_packed(series: AdjacencySeries) -> bytes:
    upper = series.upper_triangles()
    packed = np.packbits(upper, axis=1, bitorder="little")
    return MAGIC + _HEADER.pack(series.T, series.n) + packed.tobytes()


def decode_packed(data: bytes) -> AdjacencySeries:
    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise FormatError("bad magic, expected RDPGCPD1", 0)
    if len(data) < len(MAGIC) + _HEADER.size:
        raise FormatError("truncated header", len(data))
    T, n = _HEADER.unpack_from(data, len(MAGIC))
    if T < 1 or n < 1:
        raise FormatError(f"invalid shape T={T}, n={n}", len(MAGIC))
    start = len(MAGIC) + _HEADER.size
    E = n * (n - 1) // 2
    B = _block_size(n)
    if len(data) < start + T * B:
        t = (len(data) - start) // B + 1 if B else 1
        raise FormatError(f"truncated block for snapshot t={t}", len(data))
    if len(data) > start + T * B:
        raise FormatError("trailing bytes after the last block", start + T * B)
    if B == 0:
        return AdjacencySeries(np.zeros((T, n, n), dtype=np.uint8))
    raw = np.frombuffer(data, dtype=np.uint8, offset=start).reshape(T, B)
    bits = np.unpackbits(raw, axis=1, bitorder="little")
    if bits[:, E:].any():
        t = int(np.nonzero(bits[:, E:].any(axis=1))[0][0])
        raise FormatError(f"nonzero padding bits in snapshot t={t + 1}", start + (t + 1) * B - 1)
    return AdjacencySeries.from_upper_triangles(bits[:, :E], n)


def _encode_jsonl(series: AdjacencySeries) -> str:
    lines = [json.dumps({"n": series.n, "T": series.T})]
    for t in range(series.T):
        i, j = np.nonzero(np.triu(series.snapshots[t], 1))
        edges = [[int(a) + 1, int(b) + 1] for a, b in zip(i, j)]
        lines.append(json.dumps({"t": t + 1, "edges": edges}))
    return "\n".join(lines) + "\n"


def _decode_jsonl(text: str) -> AdjacencySeries:
    header = {}
    snaps = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc.msg}", f"line {lineno}") from None
        if not isinstance(obj, dict):
            raise FormatError("expected a JSON object", f"line {lineno}")
        if "t" not in obj:
            if not {"n", "T"} <= obj.keys():
                raise FormatError("object has neither 't' nor a header ('n', 'T')", f"line {lineno}")
            header = obj
            continue
        t = obj["t"]
        if not isinstance(t, int) or t < 1:
            raise FormatError(f"t must be a positive integer, got {t!r}", f"line {lineno}")
        if t in snaps:
            raise FormatError(f"duplicate snapshot t={t}", f"line {lineno}")
        edges = obj.get("edges", [])
        for e in edges:
            if (not isinstance(e, list) or len(e) != 2
                    or not all(isinstance(v, int) for v in e) or not 1 <= e[0] < e[1]):
                raise FormatError(f"edge {e!r} must be [i, j] with 1 <= i < j", f"line {lineno}")
        snaps[t] = (edges, lineno)

    n = header.get("n")
    T = header.get("T")
    max_node = max((e[1] for edges, _ in snaps.values() for e in edges), default=0)
    max_t = max(snaps, default=0)
    n = max_node if n is None else n
    T = max_t if T is None else T
    if not (isinstance(n, int) and isinstance(T, int)) or n < 1 or T < 1:
        raise FormatError(f"cannot determine a valid shape (n={n!r}, T={T!r})", "line 1")
    A = np.zeros((T, n, n), dtype=np.uint8)
    for t, (edges, lineno) in snaps.items():
        if t > T:
            raise FormatError(f"t={t} exceeds T={T}", f"line {lineno}")
        for i, j in edges:
            if j > n:
                raise FormatError(f"node {j} out of range for n={n}", f"line {lineno}")
            A[t - 1, i - 1, j - 1] = A[t - 1, j - 1, i - 1] = 1
    return AdjacencySeries(A)


def write_series(series: AdjacencySeries, path, format=None) -> None:
    fmt = format or infer_format(path)
    if fmt == PACKED:
        Path(path).write_bytes(encode_packed(series))
    elif fmt == JSONL:
        Path(path).write_text(_encode_jsonl(series))
    else:
        raise InvalidInputError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def read_series(path, format=None) -> AdjacencySeries:
    fmt = format or infer_format(path)
    if fmt == PACKED:
        return decode_packed(Path(path).read_bytes())
    if fmt == JSONL:
        return _decode_jsonl(Path(path).read_text())
    raise InvalidInputError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def write_result(result: DetectionResult, path) -> None:
    Path(path).write_text(json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n")


def read_result(path) -> DetectionResult:
    try:
        return DetectionResult.from_dict(json.loads(Path(path).read_text()))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise FormatError(f"not a detection result: {exc}") from None


# -- ingestion ------------------------------------------------------------------


def load_matrix(path) -> np.ndarray:
    """Read a whitespace- or comma-separated numeric matrix (rows are nodes)."""
    text = Path(path).read_text()
    delimiter = "," if "," in text.split("\n", 1)[0] else None
    for lineno, line in enumerate(text.splitlines(), start=1):
        for tok in (line.split(delimiter) if delimiter else line.split()):
            try:
                float(tok)
            except ValueError:
                raise FormatError(f"non-numeric entry {tok.strip()!r}", f"line {lineno}") from None
    M = np.loadtxt(path, delimiter=delimiter, ndmin=2)
    return M


def window_correlation(Z: np.ndarray) -> np.ndarray:
    """Pearson correlation between rows; zero-variance rows correlate as 0."""
    C = Z - Z.mean(axis=1, keepdims=True)
    norm = np.sqrt(np.einsum("ij,ij->i", C, C))
    # centring a constant row can leave rounding residue
    scale = np.abs(Z).max(axis=1) * math.sqrt(Z.shape[1])
    ok = norm > 1e-12 * scale
    C[ok] /= norm[ok, None]
    C[~ok] = 0.0
    R = C @ C.T
    np.fill_diagonal(R, np.where(ok, 1.0, 0.0))
    return R


def ingest_timeseries(matrix, bins: int, threshold: float, subsample=None, seed=0) -> AdjacencySeries:
    """Threshold windowed correlations of node time series into a network series.

    Parameters
    ----------
    matrix : array_like or path
        ``p x F`` matrix, one row per node and one column per frame.
    bins : int
        Number of equal consecutive windows; trailing ``F mod bins`` frames
        are dropped.
    threshold : float
        Edge ``(i, j)`` is present in window ``t`` iff the correlation of rows
        ``i`` and ``j`` over that window exceeds ``threshold``.
    subsample : int, optional
        Keep this many nodes, drawn uniformly without replacement from the
        ``seed`` stream, in increasing index order and the same for every window.
    """
    Z = load_matrix(matrix) if isinstance(matrix, (str, Path)) else np.asarray(matrix, dtype=float)
    if Z.ndim != 2:
        raise InvalidInputError(f"expected a p x F matrix, got shape {Z.shape}")
    p, F = Z.shape
    if not isinstance(bins, (int, np.integer)) or bins < 1:
        raise InvalidInputError(f"bins must be a positive integer, got {bins!r}")
    if F < bins:
        raise InvalidInputError(f"{F} frames cannot fill {bins} bins")
    if not -1.0 < threshold < 1.0:
        raise InvalidInputError(f"threshold must lie in (-1, 1), got {threshold}")
    if not np.all(np.isfinite(Z)):
        raise InvalidInputError("matrix entries must be finite")
    if subsample is not None:
        if not 2 <= subsample <= p:
            raise InvalidInputError(f"subsample must lie in [2, {p}], got {subsample}")
        keep = np.sort(make_rng(seed, "subsample").choice(p, size=subsample, replace=False))
        Z = Z[keep]
    width = F // bins
    A = np.empty((bins, Z.shape[0], Z.shape[0]), dtype=np.uint8)
    for t in range(bins):
        R = window_correlation(Z[:, t * width : (t + 1) * width])
        A[t] = R > threshold
        np.fill_diagonal(A[t], 0)
    return AdjacencySeries(A)
