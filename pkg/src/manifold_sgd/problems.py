"""Benchmark objectives over the manifold catalog."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from manifold_sgd.checks import central_diff_grad
from manifold_sgd.errors import UnknownProblem
from manifold_sgd.linalg import invsqrtm_spd, sqrtm_spd, sym, sym_eig, transpose
from manifold_sgd.manifolds import (
    Grassmannian,
    Manifold,
    PoincareBall,
    SPDAffineInvariant,
    SpecialOrthogonal,
    Sphere,
)


@dataclass
class Problem:
    """
    A minimization problem on a manifold.

    ``grad`` returns the Euclidean ambient gradient, or the Riemannian
    gradient when ``riemannian`` is set (optimizers then skip egrad2rgrad).
    """

    name: str
    manifold: Manifold
    loss: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    start: np.ndarray
    riemannian: bool = False
    optimal_value: float | None = None
    optimum: np.ndarray | None = None
    distance_to_optimum: Callable[[np.ndarray], float] | None = None
    params: dict[str, Any] = field(default_factory=dict)

    def initial_point(self) -> np.ndarray:
        """Fresh copy of the seeded starting point."""
        return np.array(self.start, copy=True)

    def grad_norm(self, x: np.ndarray, g: np.ndarray | None = None) -> float:
        """Riemannian norm of the gradient, summed in quadrature over batch rows."""
        g = self.grad(x) if g is None else g
        r = self.manifold.proju(x, g) if self.riemannian else self.manifold.egrad2rgrad(x, g)
        return float(np.sqrt(np.sum(self.manifold.inner(x, r, r))))


def _test_matrix(n: int, rng: np.random.Generator) -> np.ndarray:
    """Symmetric matrix with eigenvalues 1..n (jittered by < 0.25) in a random basis."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    w = np.arange(1, n + 1) + rng.uniform(-0.25, 0.25, size=n)
    return sym((q * w) @ q.T)


# ============================================================================
# Problems
# ============================================================================


def pole(n_points: int = 16, dim: int = 2, seed: int = 0) -> Problem:
    """Pull ``n_points`` on S^{dim−1} towards the north pole: f = Σᵢ ‖xᵢ − p‖."""
    manifold = Sphere(dim)
    target = np.zeros(dim)
    target[-1] = 1.0

    def loss(x: np.ndarray) -> float:
        return float(np.sum(np.linalg.norm(x - target, axis=-1)))

    def grad(x: np.ndarray) -> np.ndarray:
        diff = x - target
        norm = np.linalg.norm(diff, axis=-1, keepdims=True)
        # subgradient 0 at the pole itself
        return np.where(norm > 0, diff / np.where(norm > 0, norm, 1.0), 0.0)

    def mean_distance(x: np.ndarray) -> float:
        return float(np.mean(np.linalg.norm(x - target, axis=-1)))

    return Problem(
        name="pole",
        manifold=manifold,
        loss=loss,
        grad=grad,
        start=manifold.random((n_points,), seed=seed),
        optimal_value=0.0,
        optimum=np.broadcast_to(target, (n_points, dim)).copy(),
        distance_to_optimum=mean_distance,
        params={"n_points": n_points, "dim": dim},
    )


def rayleigh(n: int = 10, seed: int = 0, matrix: np.ndarray | None = None) -> Problem:
    """Smallest eigenvalue of a symmetric matrix: f = xᵀAx on S^{n−1}."""
    rng = np.random.default_rng(seed)
    a = _test_matrix(n, rng) if matrix is None else sym(np.asarray(matrix, dtype=float))
    n = a.shape[-1]
    manifold = Sphere(n)
    w, q = sym_eig(a)
    bottom = q[:, 0]

    def loss(x: np.ndarray) -> float:
        return float(x @ a @ x)

    def grad(x: np.ndarray) -> np.ndarray:
        return 2.0 * (a @ x)

    def distance(x: np.ndarray) -> float:
        # eigenvectors are defined up to sign
        return float(min(manifold.dist(x, bottom), manifold.dist(x, -bottom)))

    return Problem(
        name="rayleigh",
        manifold=manifold,
        loss=loss,
        grad=grad,
        start=manifold.random(seed=rng),
        optimal_value=float(w[0]),
        optimum=bottom,
        distance_to_optimum=distance,
        params={"n": n},
    )


def subspace(n: int = 10, p: int = 3, seed: int = 0, matrix: np.ndarray | None = None) -> Problem:
    """Dominant invariant subspace: f = −tr(XᵀAX) on Gr(n, p)."""
    rng = np.random.default_rng(seed)
    a = _test_matrix(n, rng) if matrix is None else sym(np.asarray(matrix, dtype=float))
    n = a.shape[-1]
    manifold = Grassmannian(n, p)
    w, q = sym_eig(a)
    top = q[:, -p:]

    def loss(x: np.ndarray) -> float:
        return float(-np.trace(transpose(x) @ a @ x))

    def grad(x: np.ndarray) -> np.ndarray:
        return -2.0 * (a @ x)

    def principal_angles(x: np.ndarray) -> float:
        s = np.linalg.svd(transpose(x) @ top, compute_uv=False)
        return float(np.linalg.norm(np.arccos(np.clip(s, -1.0, 1.0))))

    return Problem(
        name="subspace",
        manifold=manifold,
        loss=loss,
        grad=grad,
        start=manifold.random(seed=rng),
        optimal_value=float(-np.sum(w[-p:])),
        optimum=top,
        distance_to_optimum=principal_angles,
        params={"n": n, "p": p},
    )


def procrustes_so3(n_columns: int = 5, seed: int = 0) -> Problem:
    """Rotation alignment: f = ‖RA − B‖²_F with B = R*A."""
    rng = np.random.default_rng(seed)
    manifold = SpecialOrthogonal(3)
    a = rng.standard_normal((3, n_columns))
    target = manifold.random(seed=rng)
    b = target @ a

    def loss(x: np.ndarray) -> float:
        return float(np.sum((x @ a - b) ** 2))

    def grad(x: np.ndarray) -> np.ndarray:
        return 2.0 * (x @ a - b) @ a.T

    return Problem(
        name="procrustes_so3",
        manifold=manifold,
        loss=loss,
        grad=grad,
        start=manifold.random(seed=rng),
        optimal_value=0.0,
        optimum=target,
        distance_to_optimum=lambda x: float(manifold.dist(x, target)),
        params={"n_columns": n_columns},
    )


def geodesic_midpoint(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Affine-invariant midpoint A^{1/2}(A^{−1/2}BA^{−1/2})^{1/2}A^{1/2}."""
    s = sqrtm_spd(a)
    si = invsqrtm_spd(a)
    return sym(s @ sqrtm_spd(sym(si @ b @ si)) @ s)


def spd_mean(
    n: int = 3, k: int = 2, seed: int = 0, anchors: Sequence[np.ndarray] | None = None
) -> Problem:
    """Karcher mean of ``k`` SPD anchors: f = Σᵢ dist²(X, Aᵢ), native Riemannian gradient."""
    rng = np.random.default_rng(seed)
    manifold = SPDAffineInvariant(n)
    if anchors is None:
        points = manifold.random((k,), seed=rng)
    else:
        points = np.stack([np.asarray(p, dtype=float) for p in anchors])
        n, k = points.shape[-1], points.shape[0]
        manifold = SPDAffineInvariant(n)

    def loss(x: np.ndarray) -> float:
        return float(np.sum(manifold.dist(sym(x), points) ** 2))

    def grad(x: np.ndarray) -> np.ndarray:
        return -2.0 * np.sum(manifold.log(sym(x), points), axis=0)

    optimum = optimal_value = distance = None
    if k == 2:
        optimum = geodesic_midpoint(points[0], points[1])
        optimal_value = float(manifold.dist(points[0], points[1]) ** 2 / 2)
        distance = lambda x: float(manifold.dist(x, optimum))  # noqa: E731

    return Problem(
        name="spd_mean",
        manifold=manifold,
        loss=loss,
        grad=grad,
        start=manifold.random(seed=rng),
        riemannian=True,
        optimal_value=optimal_value,
        optimum=optimum,
        distance_to_optimum=distance,
        params={"n": n, "k": k},
    )


def tree_metric(n_points: int, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """Path lengths of a random weighted tree on ``n_points`` nodes."""
    parent = [int(rng.integers(0, i)) for i in range(1, n_points)]
    weight = rng.uniform(0.5, 1.0, size=n_points - 1) * scale
    # depth_to[i][a]: path length from node i up to its ancestor a
    depth_to: list[dict[int, float]] = [{0: 0.0}]
    for i in range(1, n_points):
        p = parent[i - 1]
        up = {anc: d + float(weight[i - 1]) for anc, d in depth_to[p].items()}
        up[i] = 0.0
        depth_to.append(up)
    d = np.zeros((n_points, n_points))
    for i in range(n_points):
        for j in range(i):
            common = depth_to[i].keys() & depth_to[j].keys()
            d[i, j] = d[j, i] = min(depth_to[i][c] + depth_to[j][c] for c in common)
    return d


def poincare_stress(n_points: int = 8, dim: int = 2, seed: int = 0) -> Problem:
    """Embed a random tree metric in the Poincaré ball: f = Σ_{i<j} (d(xᵢ,xⱼ) − dᵢⱼ)².

    The gradient is taken by central differences.
    """
    rng = np.random.default_rng(seed)
    manifold = PoincareBall(dim)
    target = tree_metric(n_points, rng)
    upper = np.triu_indices(n_points, 1)

    def loss(x: np.ndarray) -> float:
        d = manifold.dist(x[:, None, :], x[None, :, :])
        return float(np.sum((d[upper] - target[upper]) ** 2))

    def grad(x: np.ndarray) -> np.ndarray:
        return central_diff_grad(loss, x, detect_kinks=False)

    return Problem(
        name="poincare_stress",
        manifold=manifold,
        loss=loss,
        grad=grad,
        start=manifold.random((n_points,), seed=rng),
        params={"n_points": n_points, "dim": dim},
    )


PROBLEMS: dict[str, Callable[..., Problem]] = {
    "pole": pole,
    "rayleigh": rayleigh,
    "subspace": subspace,
    "procrustes_so3": procrustes_so3,
    "spd_mean": spd_mean,
    "poincare_stress": poincare_stress,
}


def list_problems() -> list[str]:
    """Names accepted by ``build_problem``."""
    return list(PROBLEMS)


def build_problem(name: str, seed: int = 0, **sizes: Any) -> Problem:
    """
    Instantiate a problem by name.

    Raises:
        UnknownProblem: If ``name`` is not registered
    """
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise UnknownProblem(f"unknown problem {name!r}; choose from {', '.join(PROBLEMS)}") from None
    return factory(seed=seed, **sizes)
