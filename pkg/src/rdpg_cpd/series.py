"""Core containers: adjacency snapshot series and change point sets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True, eq=False)
class AdjacencySeries:
    """``T`` symmetric binary ``n x n`` adjacency matrices with zero diagonals.

    ``snapshots`` is stored as a read-only ``uint8`` array of shape ``(T, n, n)``.
    Time is 0-based in the array; user-facing formats use 1-based time.
    """

    snapshots: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.snapshots)
        if a.ndim != 3 or a.shape[1] != a.shape[2] or a.shape[0] < 1 or a.shape[1] < 1:
            raise InvalidInputError(f"expected a (T, n, n) array, got shape {a.shape}")
        if a.dtype != np.uint8:
            if not np.all((a == 0) | (a == 1)):
                raise InvalidInputError("adjacency entries must be 0 or 1")
            a = a.astype(np.uint8)
        elif a.max(initial=0) > 1:
            raise InvalidInputError("adjacency entries must be 0 or 1")
        for t in range(a.shape[0]):
            if not np.array_equal(a[t], a[t].T):
                raise InvalidInputError(f"snapshot t={t + 1} is not symmetric")
            if a[t].diagonal().any():
                raise InvalidInputError(f"snapshot t={t + 1} has a nonzero diagonal")
        a = np.array(a, copy=True)
        a.setflags(write=False)
        object.__setattr__(self, "snapshots", a)

    @property
    def T(self) -> int:
        return self.snapshots.shape[0]

    @property
    def n(self) -> int:
        return self.snapshots.shape[1]

    def __len__(self):
        return self.T

    def __getitem__(self, t):
        return self.snapshots[t]

    def __eq__(self, other):
        if not isinstance(other, AdjacencySeries):
            return NotImplemented
        return np.array_equal(self.snapshots, other.snapshots)

    def upper_triangles(self) -> np.ndarray:
        """``(T, n(n-1)/2)`` array of strict upper triangles in row-major order."""
        iu = np.triu_indices(self.n, k=1)
        return self.snapshots[:, iu[0], iu[1]]

    @classmethod
    def from_upper_triangles(cls, upper, n: int) -> "AdjacencySeries":
        upper = np.asarray(upper, dtype=np.uint8)
        T = upper.shape[0]
        out = np.zeros((T, n, n), dtype=np.uint8)
        iu = np.triu_indices(n, k=1)
        out[:, iu[0], iu[1]] = upper
        out[:, iu[1], iu[0]] = upper
        return cls(out)


@dataclass(frozen=True)
class ChangePointSet:
    """Sorted change point locations.

    A change point is the 1-based time index of the first snapshot of a new
    segment, so locations lie in ``{2, ..., T}``. ``scores`` and
    ``intervals`` are optional per-point CUSUM values and detecting intervals
    ``(s_m, e_m)``; they are empty for ground truth sets.
    """

    points: tuple = ()
    scores: tuple = ()
    intervals: tuple = field(default=())

    def __post_init__(self):
        pts = tuple(int(p) for p in self.points)
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise InvalidInputError(f"change points must be strictly increasing: {pts}")
        if pts and pts[0] < 2:
            raise InvalidInputError(f"change points must be >= 2: {pts}")
        if self.scores and len(self.scores) != len(pts):
            raise InvalidInputError("scores must align with points")
        if self.intervals and len(self.intervals) != len(pts):
            raise InvalidInputError("intervals must align with points")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        object.__setattr__(
            self, "intervals", tuple((int(a), int(b)) for a, b in self.intervals)
        )

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def check_within(self, T: int):
        if self.points and self.points[-1] > T:
            raise InvalidInputError(f"change point {self.points[-1]} exceeds T={T}")

    def to_dict(self) -> dict:
        return {
            "points": list(self.points),
            "scores": list(self.scores),
            "intervals": [list(iv) for iv in self.intervals],
        }

    @classmethod
    def from_dict(cls, d) -> "ChangePointSet":
        return cls(
            tuple(d.get("points", ())),
            tuple(d.get("scores", ())),
            tuple(tuple(iv) for iv in d.get("intervals", ())),
        )
