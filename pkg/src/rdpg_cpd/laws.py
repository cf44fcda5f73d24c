"""Latent position distributions used by the generators and exact checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True, eq=False)
class DiscreteLatentLaw:
    """Finite-support law on R^d given as ``(point, probability)`` atoms.

    All pairwise inner products of support points must lie in ``[0, 1]``.
    """

    points: np.ndarray
    probs: np.ndarray

    def __init__(self, atoms=None, *, points=None, probs=None):
        if atoms is not None:
            pts, prs = zip(*atoms)
            points, probs = pts, prs
        pts = np.atleast_1d(np.asarray(points, dtype=float))
        if pts.ndim == 1:
            pts = pts[:, None]
        prs = np.asarray(probs, dtype=float)
        if pts.ndim != 2 or len(pts) != len(prs) or len(prs) == 0:
            raise InvalidInputError("atoms must be (point, probability) pairs")
        if np.any(prs <= 0):
            raise InvalidInputError("atom probabilities must be positive")
        if abs(prs.sum() - 1.0) > 1e-12:
            raise InvalidInputError(f"atom probabilities sum to {prs.sum()!r}, not 1")
        gram = pts @ pts.T
        if gram.min() < -1e-12 or gram.max() > 1 + 1e-12:
            raise InvalidInputError("support inner products must lie in [0, 1]")
        pts.setflags(write=False)
        prs.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", prs)

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def atoms(self):
        return list(zip(map(tuple, self.points), self.probs))

    def sample(self, rng, size):
        idx = rng.choice(len(self.probs), size=size, p=self.probs)
        return self.points[idx]

    def inner_product_law(self):
        """Exact law of ``X^T Y`` for independent ``X, Y``: sorted values and masses."""
        vals = (self.points @ self.points.T).ravel()
        mass = np.outer(self.probs, self.probs).ravel()
        u, inv = np.unique(vals, return_inverse=True)
        return u, np.bincount(inv, weights=mass, minlength=u.size)

    def inner_product_cdf(self, z):
        """``G(z) = P{X^T Y <= z}``; vectorised over ``z``."""
        u, w = self.inner_product_law()
        cum = np.concatenate([[0.0], np.cumsum(w)])
        return cum[np.searchsorted(u, z, side="right")]


@dataclass(frozen=True)
class PointMass:
    x: tuple

    @property
    def d(self):
        return len(self.x)

    def sample(self, rng, size):
        return np.tile(np.asarray(self.x, dtype=float), (size, 1))


@dataclass(frozen=True)
class Uniform:
    """Independent coordinates ``U[low, high]`` in ``d`` dimensions."""

    low: float
    high: float
    d: int = 1

    def sample(self, rng, size):
        return rng.uniform(self.low, self.high, size=(size, self.d))


@dataclass(frozen=True)
class Dirichlet:
    alpha: tuple

    @property
    def d(self):
        return len(self.alpha)

    def sample(self, rng, size):
        return rng.dirichlet(np.asarray(self.alpha, dtype=float), size=size)


def law_from_spec(spec: dict):
    """Build a latent law from a config mapping, e.g. ``{"family": "dirichlet", "alpha": [1, 1]}``."""
    family = spec.get("family")
    if family == "point_mass":
        return PointMass(tuple(spec["x"]))
    if family == "uniform":
        return Uniform(spec["low"], spec["high"], spec.get("d", 1))
    if family == "dirichlet":
        return Dirichlet(tuple(spec["alpha"]))
    if family == "discrete":
        return DiscreteLatentLaw(points=spec["points"], probs=spec["probs"])
    raise InvalidInputError(f"unknown latent law family {family!r}")
