"""Manifold catalog and the descriptor → instance registry."""

from __future__ import annotations

from manifold_sgd.manifolds.base import Manifold, Seed
from manifold_sgd.manifolds.cholesky import Cholesky
from manifold_sgd.manifolds.euclidean import Euclidean
from manifold_sgd.manifolds.hyperbolic import Hyperboloid, PoincareBall, gyration, minkowski, mobius_add
from manifold_sgd.manifolds.product import Product
from manifold_sgd.manifolds.rotations import SpecialOrthogonal
from manifold_sgd.manifolds.spd import SPDAffineInvariant, SPDLogCholesky, SPDLogEuclidean
from manifold_sgd.manifolds.sphere import Sphere
from manifold_sgd.manifolds.stiefel import Grassmannian, StiefelEuclidean
from manifold_sgd.models import ManifoldKind, ManifoldSpec

__all__ = [
    "DEFAULT_SPECS",
    "Cholesky",
    "Euclidean",
    "Grassmannian",
    "Hyperboloid",
    "Manifold",
    "PoincareBall",
    "Product",
    "SPDAffineInvariant",
    "SPDLogCholesky",
    "SPDLogEuclidean",
    "Seed",
    "SpecialOrthogonal",
    "Sphere",
    "StiefelEuclidean",
    "build_manifold",
    "default_manifold",
    "gyration",
    "minkowski",
    "mobius_add",
]

_SQUARE = {
    "so": SpecialOrthogonal,
    "spd_affine": SPDAffineInvariant,
    "spd_log_euclidean": SPDLogEuclidean,
    "spd_log_cholesky": SPDLogCholesky,
    "cholesky": Cholesky,
}

# Sizes used when a kind is requested without dimensions (CLI ``check``).
DEFAULT_SPECS: dict[ManifoldKind, ManifoldSpec] = {
    "euclidean": ManifoldSpec(kind="euclidean", shape=(3,)),
    "sphere": ManifoldSpec(kind="sphere", shape=(3,)),
    "hyperboloid": ManifoldSpec(kind="hyperboloid", shape=(2,)),
    "poincare": ManifoldSpec(kind="poincare", shape=(2,)),
    "stiefel": ManifoldSpec(kind="stiefel", shape=(5, 2)),
    "grassmannian": ManifoldSpec(kind="grassmannian", shape=(5, 2)),
    "so": ManifoldSpec(kind="so", shape=(3,)),
    "spd_affine": ManifoldSpec(kind="spd_affine", shape=(3,)),
    "spd_log_euclidean": ManifoldSpec(kind="spd_log_euclidean", shape=(3,)),
    "spd_log_cholesky": ManifoldSpec(kind="spd_log_cholesky", shape=(3,)),
    "cholesky": ManifoldSpec(kind="cholesky", shape=(3,)),
    "product": ManifoldSpec(
        kind="product",
        components=(
            ManifoldSpec(kind="sphere", shape=(3,)),
            ManifoldSpec(kind="poincare", shape=(2,)),
            ManifoldSpec(kind="euclidean", shape=(2,)),
        ),
    ),
}


def build_manifold(spec: ManifoldSpec) -> Manifold:
    """Instantiate the manifold a descriptor names."""
    kind = spec.kind
    if kind == "euclidean":
        return Euclidean(spec.shape)
    if kind == "sphere":
        return Sphere(spec.shape[0])
    if kind == "hyperboloid":
        return Hyperboloid(spec.shape[0])
    if kind == "poincare":
        return PoincareBall(spec.shape[0], c=spec.curvature)
    if kind == "stiefel":
        return StiefelEuclidean(*spec.shape)
    if kind == "grassmannian":
        return Grassmannian(*spec.shape)
    if kind in _SQUARE:
        return _SQUARE[kind](spec.shape[0])
    if kind == "product":
        return Product([build_manifold(c) for c in spec.components])
    raise ValueError(f"unknown manifold kind: {kind}")


def default_manifold(kind: ManifoldKind) -> Manifold:
    """Manifold of ``kind`` at its default size."""
    return build_manifold(DEFAULT_SPECS[kind])
