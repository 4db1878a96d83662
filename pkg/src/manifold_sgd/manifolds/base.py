"""Abstract manifold interface.

Points and tangent vectors are plain numpy arrays: the trailing
``ndims`` axes are manifold coordinates, leading axes are a batch of
independent points. Every operator broadcasts over the batch.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import ClassVar

import numpy as np

from manifold_sgd.config import get_settings
from manifold_sgd.errors import ShapeError, Unsupported
from manifold_sgd.models import ManifoldSpec

Seed = int | np.random.Generator | None


class Manifold(ABC):
    """Operator contract shared by every geometry.

    Subclasses must implement ``inner``, ``proju``, ``projx``, ``retr``,
    ``point_defect`` and ``_random``. ``exp``, ``log`` and ``ptransp`` are
    optional; manifolds without closed forms leave the ``has_*`` flags
    ``False`` and callers fall back to ``retr`` and ``transp``.
    """

    name: ClassVar[str]
    has_exp: ClassVar[bool] = True
    has_log: ClassVar[bool] = True
    has_ptransp: ClassVar[bool] = True

    def __init__(self, point_shape: tuple[int, ...]):
        self.point_shape = tuple(point_shape)

    @property
    def ndims(self) -> int:
        """Number of trailing manifold axes."""
        return len(self.point_shape)

    @property
    @abstractmethod
    def spec(self) -> ManifoldSpec:
        """Descriptor that rebuilds this manifold."""

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.spec.label()})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Manifold) and self.spec == other.spec

    def __hash__(self) -> int:
        return hash(self.spec)

    # ------------------------------------------------------------------
    # Shape helpers
    # ------------------------------------------------------------------

    @property
    def _axes(self) -> tuple[int, ...]:
        return tuple(range(-self.ndims, 0))

    def batch_shape(self, x: np.ndarray) -> tuple[int, ...]:
        """Leading batch axes of ``x``."""
        self.check_shape(x)
        return x.shape[: x.ndim - self.ndims]

    def check_shape(self, *arrays: np.ndarray) -> tuple[int, ...]:
        """Validate trailing shapes and return the broadcast batch shape."""
        batches = []
        for a in arrays:
            a = np.asarray(a)
            if a.ndim < self.ndims or a.shape[a.ndim - self.ndims :] != self.point_shape:
                raise ShapeError(
                    f"{type(self).__name__} expects trailing shape {self.point_shape}, "
                    f"got {a.shape}"
                )
            batches.append(a.shape[: a.ndim - self.ndims])
        try:
            return np.broadcast_shapes(*batches)
        except ValueError as e:
            raise ShapeError(f"batch shapes do not broadcast: {batches}") from e

    def _sum(self, a: np.ndarray, keepdims: bool = False) -> np.ndarray:
        """Reduce over the manifold axes."""
        return np.sum(a, axis=self._axes, keepdims=keepdims)

    def _expand(self, s: np.ndarray) -> np.ndarray:
        """Append unit manifold axes to a batch-shaped array."""
        return np.reshape(s, np.shape(s) + (1,) * self.ndims)

    # ------------------------------------------------------------------
    # Metric
    # ------------------------------------------------------------------

    @abstractmethod
    def inner(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Riemannian metric ⟨u, v⟩_x, one value per batch row."""

    def norm(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Riemannian norm of ``u`` at ``x``."""
        return np.sqrt(np.maximum(self.inner(x, u, u), 0.0))

    # ------------------------------------------------------------------
    # Projections
    # ------------------------------------------------------------------

    @abstractmethod
    def proju(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Project an ambient vector onto the tangent space at ``x``."""

    @abstractmethod
    def projx(self, x: np.ndarray) -> np.ndarray:
        """Project an ambient array onto the manifold."""

    def egrad2rgrad(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        """Convert a Euclidean gradient into the Riemannian gradient."""
        return self.proju(x, g)

    # ------------------------------------------------------------------
    # Maps
    # ------------------------------------------------------------------

    def exp(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Exponential map."""
        raise Unsupported(f"{type(self).__name__} has no closed-form exponential map")

    def log(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Logarithmic map."""
        raise Unsupported(f"{type(self).__name__} has no closed-form logarithm")

    @abstractmethod
    def retr(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Retraction: first-order approximation of ``exp``."""

    def transp(self, x: np.ndarray, y: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Vector transport by projection onto the tangent space at ``y``."""
        return self.proju(y, v)

    def ptransp(self, x: np.ndarray, y: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Parallel transport along the connecting geodesic."""
        raise Unsupported(f"{type(self).__name__} has no closed-form parallel transport")

    def dist(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Geodesic distance."""
        return self.norm(x, self.log(x, y))

    def step(self, x: np.ndarray, u: np.ndarray, use_exp: bool = True) -> np.ndarray:
        """``exp`` when requested and available, otherwise ``retr``."""
        if use_exp and self.has_exp:
            return self.exp(x, u)
        return self.retr(x, u)

    def transport(self, x: np.ndarray, y: np.ndarray, v: np.ndarray, exact: bool = True) -> np.ndarray:
        """``ptransp`` when requested and available, otherwise ``transp``."""
        if exact and self.has_ptransp:
            return self.ptransp(x, y, v)
        return self.transp(x, y, v)

    # ------------------------------------------------------------------
    # Sampling
    # ------------------------------------------------------------------

    @abstractmethod
    def _random(self, batch_shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
        """Draw points with the given generator."""

    def random(self, batch_shape: tuple[int, ...] = (), seed: Seed = None) -> np.ndarray:
        """Seeded random points; identical seeds give identical output."""
        rng = np.random.default_rng(seed)
        return self._random(tuple(batch_shape), rng)

    def random_tangent(self, x: np.ndarray, seed: Seed = None) -> np.ndarray:
        """Tangent vectors at ``x`` with unit Riemannian norm."""
        rng = np.random.default_rng(seed)
        u = self.proju(x, rng.standard_normal(np.shape(x)).astype(x.dtype))
        nu = self.norm(x, u)
        return u / self._expand(np.where(nu > 0, nu, 1.0))

    # ------------------------------------------------------------------
    # Membership
    # ------------------------------------------------------------------

    @abstractmethod
    def point_defect(self, x: np.ndarray) -> np.ndarray:
        """Per-row violation of the membership conditions (0 on the manifold)."""

    def vector_defect(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Per-row distance between ``v`` and its tangent projection."""
        return np.abs(self.proju(x, v) - v).max(axis=self._axes, initial=0.0)

    def _tol(self, x: np.ndarray, tol: float | None) -> float:
        return tol if tol is not None else get_settings().membership_tol(np.asarray(x).dtype)

    def check_point(self, x: np.ndarray, tol: float | None = None) -> bool:
        """True iff every batch row lies on the manifold within ``tol``."""
        self.check_shape(x)
        defect = self.point_defect(np.asarray(x))
        return bool(np.all(defect <= self._tol(x, tol)))

    def check_vector(self, x: np.ndarray, v: np.ndarray, tol: float | None = None) -> bool:
        """True iff ``v`` is tangent at ``x`` within ``tol``."""
        self.check_shape(x, v)
        defect = self.vector_defect(np.asarray(x), np.asarray(v))
        return bool(np.all(defect <= self._tol(x, tol)))
