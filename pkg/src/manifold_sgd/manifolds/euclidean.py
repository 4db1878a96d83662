"""Flat space with the Euclidean metric."""

from __future__ import annotations

import numpy as np

from manifold_sgd.manifolds.base import Manifold
from manifold_sgd.models import ManifoldSpec


class Euclidean(Manifold):
    """Unconstrained arrays of a fixed trailing shape.

    ``Euclidean(())`` treats every scalar as its own point, which is how
    unbound parameters are optimized.
    """

    name = "euclidean"

    def __init__(self, shape: tuple[int, ...] = ()):
        super().__init__(tuple(shape))

    @property
    def spec(self) -> ManifoldSpec:
        return ManifoldSpec(kind="euclidean", shape=self.point_shape)

    def inner(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        self.check_shape(x, u, v)
        return self._sum(u * v)

    def proju(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        self.check_shape(x, u)
        return np.asarray(u)

    def projx(self, x: np.ndarray) -> np.ndarray:
        self.check_shape(x)
        return np.asarray(x)

    def exp(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return x + u

    retr = exp

    def log(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return y - x

    def transp(self, x: np.ndarray, y: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.broadcast_to(v, np.broadcast_shapes(np.shape(y), np.shape(v))).copy()

    ptransp = transp

    def dist(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.sqrt(self._sum((y - x) ** 2))

    def _random(self, batch_shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal(batch_shape + self.point_shape)

    def point_defect(self, x: np.ndarray) -> np.ndarray:
        finite = np.all(np.isfinite(x), axis=self._axes)
        return np.where(finite, 0.0, np.inf)
