"""Rotation group SO(n) with the bi-invariant metric."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from manifold_sgd.errors import CutLocus
from manifold_sgd.linalg import qr_signfix, skew, transpose
from manifold_sgd.manifolds.base import Manifold
from manifold_sgd.models import ManifoldSpec


def expm_skew(a: np.ndarray) -> np.ndarray:
    """Matrix exponential of (a stack of) skew-symmetric matrices."""
    return np.asarray(scipy.linalg.expm(a))


def logm_so(r: np.ndarray) -> np.ndarray:
    """Principal logarithm of (a stack of) rotations, returned skew-symmetric.

    Raises:
        CutLocus: If a rotation angle reaches pi (the log is not unique).
    """
    n = r.shape[-1]
    flat = r.reshape(-1, n, n)
    out = np.empty(flat.shape, dtype=np.result_type(r.dtype, np.float32))
    for i, m in enumerate(flat):
        if np.any(np.isclose(np.linalg.eigvals(m), -1.0, atol=1e-9)):
            raise CutLocus("rotation angle pi: principal logarithm is not unique")
        out[i] = np.real(scipy.linalg.logm(m))
    return skew(out.reshape(r.shape))


def _det_fix(u: np.ndarray, vh: np.ndarray) -> np.ndarray:
    """Flip the last left singular vector where det(U Vᵀ) = −1."""
    det = np.linalg.det(u @ vh)
    u = u.copy()
    u[..., -1] *= np.where(det < 0, -1.0, 1.0)[..., None]
    return u @ vh


class SpecialOrthogonal(Manifold):
    """SO(n) = {x : xᵀx = I, det x = 1}.

    Tangent vectors at ``x`` are ``x @ A`` with ``A`` skew-symmetric. The
    metric is ½·tr(uᵀv) so that geodesic length equals ‖log(xᵀy)‖_F / √2.
    """

    name = "so"

    def __init__(self, n: int = 3):
        super().__init__((n, n))

    @property
    def spec(self) -> ManifoldSpec:
        return ManifoldSpec(kind="so", shape=(self.point_shape[0],))

    def inner(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        self.check_shape(x, u, v)
        return 0.5 * np.sum(u * v, axis=(-2, -1))

    def proju(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        self.check_shape(x, u)
        return x @ skew(transpose(x) @ u)

    def egrad2rgrad(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        # Factor 2 compensates the ½ in the metric.
        return 2.0 * self.proju(x, g)

    def projx(self, x: np.ndarray) -> np.ndarray:
        """Closest rotation: polar factor with the determinant forced to +1."""
        self.check_shape(x)
        u, _, vh = np.linalg.svd(x)
        return _det_fix(u, vh)

    def exp(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return x @ expm_skew(skew(transpose(x) @ u))

    def log(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return x @ logm_so(transpose(x) @ y)

    def dist(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.linalg.norm(logm_so(transpose(x) @ y), axis=(-2, -1)) / np.sqrt(2.0)

    def retr(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return qr_signfix(x + u)[0]

    def ptransp(self, x: np.ndarray, y: np.ndarray, v: np.ndarray) -> np.ndarray:
        """x·E·(xᵀv)·E with E = exp(½ log(xᵀy))."""
        half = expm_skew(0.5 * logm_so(transpose(x) @ y))
        return x @ half @ skew(transpose(x) @ v) @ half

    def _random(self, batch_shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
        q = qr_signfix(rng.standard_normal(batch_shape + self.point_shape))[0]
        det = np.linalg.det(q)
        q[..., :, 0] *= np.where(det < 0, -1.0, 1.0)[..., None]
        return q

    def point_defect(self, x: np.ndarray) -> np.ndarray:
        n = x.shape[-1]
        ortho = np.abs(transpose(x) @ x - np.eye(n)).max(axis=(-2, -1))
        return np.maximum(ortho, np.abs(np.linalg.det(x) - 1.0))
