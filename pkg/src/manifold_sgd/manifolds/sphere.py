"""Unit sphere embedded in R^n with the induced metric."""

from __future__ import annotations

import numpy as np

from manifold_sgd.errors import CutLocus, DegenerateInput
from manifold_sgd.manifolds.base import Manifold
from manifold_sgd.models import ManifoldSpec

# Division guard for norms in denominators
EPS_DIV = 1e-15


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b, axis=-1, keepdims=True)


class Sphere(Manifold):
    """S^{n-1} = {x in R^n : ||x|| = 1}; the last axis holds coordinates."""

    name = "sphere"

    def __init__(self, n: int = 3):
        super().__init__((n,))

    @property
    def spec(self) -> ManifoldSpec:
        return ManifoldSpec(kind="sphere", shape=self.point_shape)

    def inner(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        self.check_shape(x, u, v)
        return np.sum(u * v, axis=-1)

    def proju(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        self.check_shape(x, u)
        return u - _dot(x, u) * x

    def projx(self, x: np.ndarray) -> np.ndarray:
        self.check_shape(x)
        nx = np.linalg.norm(x, axis=-1, keepdims=True)
        if np.any(nx == 0):
            raise DegenerateInput("cannot project the zero vector onto the sphere")
        return x / nx

    def exp(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        nu = np.linalg.norm(u, axis=-1, keepdims=True)
        y = np.cos(nu) * x + np.sin(nu) * u / np.maximum(nu, EPS_DIV)
        # Unit norm is restored on every step; a zero step returns x untouched.
        return np.where(nu > 0, y / np.linalg.norm(y, axis=-1, keepdims=True), x)

    def _angle(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(θ, residual y − ⟨x,y⟩x, its norm); θ via atan2 for accuracy at small angles."""
        c = _dot(x, y)
        w = y - c * x
        nw = np.linalg.norm(w, axis=-1, keepdims=True)
        return np.arctan2(nw, c), w, nw

    def log(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        theta, w, nw = self._angle(x, y)
        if np.any((nw < 1e-12) & (theta > np.pi / 2)):
            raise CutLocus("log undefined for antipodal points on the sphere")
        return theta * w / np.maximum(nw, EPS_DIV)

    def dist(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self._angle(x, y)[0][..., 0]

    def retr(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        y = x + u
        return y / np.linalg.norm(y, axis=-1, keepdims=True)

    def ptransp(self, x: np.ndarray, y: np.ndarray, v: np.ndarray) -> np.ndarray:
        u = self.log(x, y)
        theta2 = _dot(u, u)
        theta = np.sqrt(theta2)
        coef = _dot(u, v) / np.maximum(theta2, EPS_DIV**2)
        out = v - coef * (u * (1 - np.cos(theta)) + x * theta * np.sin(theta))
        return np.where(theta > 0, out, v)

    def _random(self, batch_shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
        x = rng.standard_normal(batch_shape + self.point_shape)
        return x / np.linalg.norm(x, axis=-1, keepdims=True)

    def point_defect(self, x: np.ndarray) -> np.ndarray:
        return np.abs(np.linalg.norm(x, axis=-1) - 1.0)
