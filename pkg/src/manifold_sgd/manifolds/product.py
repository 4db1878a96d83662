"""Cartesian products of manifolds packed along one trailing axis."""

from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np

from manifold_sgd.manifolds.base import Manifold
from manifold_sgd.models import ManifoldSpec


class Product(Manifold):
    """M₁ × … × M_k.

    A point is the concatenation of each component's flattened point along
    a single trailing axis; ``slices`` records where each component lives.
    Every operator applies componentwise and the metric is the sum of the
    component metrics.
    """

    name = "product"

    def __init__(self, components: Sequence[Manifold]):
        if not components:
            raise ValueError("a product needs at least one component")
        self.components = tuple(components)
        self.slices: list[slice] = []
        start = 0
        for m in self.components:
            size = m.spec.point_size
            self.slices.append(slice(start, start + size))
            start += size
        super().__init__((start,))

    @property
    def has_exp(self) -> bool:  # type: ignore[override]
        return all(m.has_exp for m in self.components)

    @property
    def has_log(self) -> bool:  # type: ignore[override]
        return all(m.has_log for m in self.components)

    @property
    def has_ptransp(self) -> bool:  # type: ignore[override]
        return all(m.has_ptransp for m in self.components)

    @property
    def spec(self) -> ManifoldSpec:
        return ManifoldSpec(kind="product", components=tuple(m.spec for m in self.components))

    # ------------------------------------------------------------------
    # Packing
    # ------------------------------------------------------------------

    def take(self, a: np.ndarray, i: int) -> np.ndarray:
        """Component ``i`` of ``a`` in that component's own point shape."""
        a = np.asarray(a)
        part = a[..., self.slices[i]]
        return part.reshape(a.shape[:-1] + self.components[i].point_shape)

    def pack(self, parts: Sequence[np.ndarray]) -> np.ndarray:
        """Inverse of ``take`` over all components."""
        flat = []
        for m, p in zip(self.components, parts, strict=True):
            p = np.asarray(p)
            flat.append(p.reshape(p.shape[: p.ndim - m.ndims] + (-1,)))
        batch = np.broadcast_shapes(*(f.shape[:-1] for f in flat))
        return np.concatenate([np.broadcast_to(f, batch + f.shape[-1:]) for f in flat], axis=-1)

    def _map(self, fn: Callable[..., np.ndarray], *arrays: np.ndarray) -> np.ndarray:
        return self.pack(
            [fn(m, *(self.take(a, i) for a in arrays)) for i, m in enumerate(self.components)]
        )

    def _total(self, fn: Callable[..., np.ndarray], *arrays: np.ndarray) -> np.ndarray:
        return sum(
            (fn(m, *(self.take(a, i) for a in arrays)) for i, m in enumerate(self.components)),
            start=np.asarray(0.0),
        )

    # ------------------------------------------------------------------
    # Operators
    # ------------------------------------------------------------------

    def inner(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        self.check_shape(x, u, v)
        return self._total(lambda m, *a: m.inner(*a), x, u, v)

    def proju(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        self.check_shape(x, u)
        return self._map(lambda m, *a: m.proju(*a), x, u)

    def egrad2rgrad(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        return self._map(lambda m, *a: m.egrad2rgrad(*a), x, g)

    def projx(self, x: np.ndarray) -> np.ndarray:
        self.check_shape(x)
        return self._map(lambda m, *a: m.projx(*a), x)

    def exp(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self._map(lambda m, *a: m.exp(*a), x, u)

    def log(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self._map(lambda m, *a: m.log(*a), x, y)

    def retr(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self._map(lambda m, *a: m.retr(*a), x, u)

    def step(self, x: np.ndarray, u: np.ndarray, use_exp: bool = True) -> np.ndarray:
        # each component falls back to its own retraction independently
        return self._map(lambda m, *a: m.step(*a, use_exp=use_exp), x, u)

    def transp(self, x: np.ndarray, y: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self._map(lambda m, *a: m.transp(*a), x, y, v)

    def ptransp(self, x: np.ndarray, y: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self._map(lambda m, *a: m.ptransp(*a), x, y, v)

    def transport(self, x: np.ndarray, y: np.ndarray, v: np.ndarray, exact: bool = True) -> np.ndarray:
        return self._map(lambda m, *a: m.transport(*a, exact=exact), x, y, v)

    def dist(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.sqrt(self._total(lambda m, *a: m.dist(*a) ** 2, x, y))

    def _random(self, batch_shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
        return self.pack([m._random(batch_shape, rng) for m in self.components])

    def random_tangent(self, x: np.ndarray, seed: int | np.random.Generator | None = None) -> np.ndarray:
        rng = np.random.default_rng(seed)
        u = self._map(lambda m, xi: m.random_tangent(xi, seed=rng), x)
        nu = self.norm(x, u)
        return u / self._expand(np.where(nu > 0, nu, 1.0))

    def point_defect(self, x: np.ndarray) -> np.ndarray:
        defects = [m.point_defect(self.take(x, i)) for i, m in enumerate(self.components)]
        return np.maximum.reduce(np.broadcast_arrays(*defects))
