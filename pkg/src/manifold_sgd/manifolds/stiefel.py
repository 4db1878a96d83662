"""Orthonormal frames: Stiefel manifold (Euclidean metric) and Grassmannian."""

from __future__ import annotations

import numpy as np

from manifold_sgd.errors import CutLocus
from manifold_sgd.linalg import qr_signfix, sym, transpose
from manifold_sgd.manifolds.base import Manifold
from manifold_sgd.models import ManifoldSpec


def _orthonormality_defect(x: np.ndarray) -> np.ndarray:
    p = x.shape[-1]
    return np.abs(transpose(x) @ x - np.eye(p)).max(axis=(-2, -1))


class _Frames(Manifold):
    """Shared machinery for n×p matrices with orthonormal columns."""

    def __init__(self, n: int, p: int):
        if not n >= p >= 1:
            raise ValueError(f"need n >= p >= 1, got n={n}, p={p}")
        super().__init__((n, p))

    @property
    def spec(self) -> ManifoldSpec:
        return ManifoldSpec(kind=self.name, shape=self.point_shape)  # type: ignore[arg-type]

    def inner(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        self.check_shape(x, u, v)
        return np.sum(u * v, axis=(-2, -1))

    def retr(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return qr_signfix(x + u)[0]

    def _random(self, batch_shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
        return qr_signfix(rng.standard_normal(batch_shape + self.point_shape))[0]

    def point_defect(self, x: np.ndarray) -> np.ndarray:
        return _orthonormality_defect(x)


class StiefelEuclidean(_Frames):
    """St(n, p) with the metric induced by the Frobenius inner product.

    No closed-form exponential, logarithm or parallel transport is provided;
    optimizers step with the QR retraction and transport by projection.
    """

    name = "stiefel"
    has_exp = False
    has_log = False
    has_ptransp = False

    def proju(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        self.check_shape(x, u)
        return u - x @ sym(transpose(x) @ u)

    def projx(self, x: np.ndarray) -> np.ndarray:
        """Closest frame in Frobenius norm (polar factor)."""
        self.check_shape(x)
        u, _, vh = np.linalg.svd(x, full_matrices=False)
        return u @ vh


class Grassmannian(_Frames):
    """Gr(n, p): p-dimensional subspaces of R^n, orthonormal representatives."""

    name = "grassmannian"

    def proju(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        self.check_shape(x, u)
        return u - x @ (transpose(x) @ u)

    def projx(self, x: np.ndarray) -> np.ndarray:
        self.check_shape(x)
        return qr_signfix(x)[0]

    def _geodesic(self, x: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, ...]:
        """Thin SVD of the direction and the unnormalized endpoint."""
        uu, s, vh = np.linalg.svd(u, full_matrices=False)
        v = transpose(vh)
        xv = x @ v
        end = (xv * np.cos(s)[..., None, :]) @ vh + (uu * np.sin(s)[..., None, :]) @ vh
        return uu, s, v, xv, end

    def exp(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return qr_signfix(self._geodesic(x, u)[-1])[0]

    def log(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        xty = transpose(x) @ y
        if np.any(np.abs(np.linalg.det(xty)) < 1e-12):
            raise CutLocus("subspaces have a principal angle of pi/2; log undefined")
        a = y - x @ xty
        # a @ inv(xᵀy) without forming the inverse
        m = transpose(np.linalg.solve(transpose(xty), transpose(a)))
        uu, s, vh = np.linalg.svd(m, full_matrices=False)
        return (uu * np.arctan(s)[..., None, :]) @ vh

    def ptransp(self, x: np.ndarray, y: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Transport along the geodesic, then align with ``y``'s representative."""
        h = self.log(x, y)
        uu, s, _, xv, end = self._geodesic(x, h)
        moved = (
            -(xv * np.sin(s)[..., None, :]) @ (transpose(uu) @ v)
            + (uu * np.cos(s)[..., None, :]) @ (transpose(uu) @ v)
            + v
            - uu @ (transpose(uu) @ v)
        )
        # ``end`` and ``y`` span the same subspace; rotate into y's basis
        align = transpose(end) @ y
        return self.proju(y, moved @ align)
