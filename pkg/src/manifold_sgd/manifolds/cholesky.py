"""Lower-triangular matrices with positive diagonal (Log-Cholesky geometry)."""

from __future__ import annotations

import numpy as np

from manifold_sgd.config import get_settings
from manifold_sgd.manifolds.base import Manifold
from manifold_sgd.models import ManifoldSpec


def strict_lower(a: np.ndarray) -> np.ndarray:
    """Strictly lower triangular part."""
    return np.tril(a, -1)


def diagonal(a: np.ndarray) -> np.ndarray:
    """Diagonal as a vector."""
    return np.diagonal(a, axis1=-2, axis2=-1)


def with_diagonal(lower: np.ndarray, d: np.ndarray) -> np.ndarray:
    """``lower`` (strict part) plus ``diag(d)``."""
    n = d.shape[-1]
    return lower + d[..., :, None] * np.eye(n, dtype=d.dtype)


class Cholesky(Manifold):
    """Cholesky factors: metric Euclidean on the strict part and
    Σ uᵢᵢvᵢᵢ / Lᵢᵢ² on the diagonal.
    """

    name = "cholesky"

    def __init__(self, n: int = 3):
        super().__init__((n, n))

    @property
    def spec(self) -> ManifoldSpec:
        return ManifoldSpec(kind="cholesky", shape=(self.point_shape[0],))

    def inner(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        self.check_shape(x, u, v)
        strict = np.sum(strict_lower(u) * strict_lower(v), axis=(-2, -1))
        return strict + np.sum(diagonal(u) * diagonal(v) / diagonal(x) ** 2, axis=-1)

    def proju(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        self.check_shape(x, u)
        return np.broadcast_to(np.tril(u), np.broadcast_shapes(np.shape(x), np.shape(u))).copy()

    def egrad2rgrad(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        return with_diagonal(strict_lower(g), diagonal(g) * diagonal(x) ** 2)

    def projx(self, x: np.ndarray) -> np.ndarray:
        """Lower triangle with the diagonal made positive (floored at ``eig_floor``)."""
        self.check_shape(x)
        floor = get_settings().eig_floor
        return with_diagonal(strict_lower(x), np.maximum(np.abs(diagonal(x)), floor))

    def exp(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        d = diagonal(x)
        return with_diagonal(strict_lower(x) + strict_lower(u), d * np.exp(diagonal(u) / d))

    def log(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        d = diagonal(x)
        return with_diagonal(strict_lower(y) - strict_lower(x), d * np.log(diagonal(y) / d))

    def dist(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        strict = np.sum((strict_lower(y) - strict_lower(x)) ** 2, axis=(-2, -1))
        logs = np.sum(np.log(diagonal(y) / diagonal(x)) ** 2, axis=-1)
        return np.sqrt(strict + logs)

    def retr(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Second-order expansion of ``exp``; 1 + t + t²/2 > 0 keeps the diagonal positive."""
        d = diagonal(x)
        t = diagonal(u) / d
        return with_diagonal(strict_lower(x) + strict_lower(u), d * (1 + t + 0.5 * t * t))

    def ptransp(self, x: np.ndarray, y: np.ndarray, v: np.ndarray) -> np.ndarray:
        return with_diagonal(strict_lower(v), diagonal(v) * diagonal(y) / diagonal(x))

    def _random(self, batch_shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
        n = self.point_shape[0]
        lower = strict_lower(rng.standard_normal(batch_shape + (n, n)))
        return with_diagonal(lower, np.exp(0.5 * rng.standard_normal(batch_shape + (n,))))

    def point_defect(self, x: np.ndarray) -> np.ndarray:
        upper = np.abs(np.triu(x, 1)).max(axis=(-2, -1), initial=0.0)
        return np.where(np.all(diagonal(x) > 0, axis=-1), upper, np.inf)
