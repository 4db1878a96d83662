"""Hyperbolic space: hyperboloid (Minkowski) and Poincaré ball models."""

from __future__ import annotations

import numpy as np

from manifold_sgd.config import get_settings
from manifold_sgd.errors import DegenerateInput
from manifold_sgd.manifolds.base import Manifold
from manifold_sgd.models import ManifoldSpec

# Clamping safety
MIN_NORM = 1e-15
# Arguments of artanh are kept this far inside (-1, 1)
ARTANH_MARGIN = 1e-12


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b, axis=-1, keepdims=True)


def _artanh(x: np.ndarray) -> np.ndarray:
    return np.arctanh(np.clip(x, -1 + ARTANH_MARGIN, 1 - ARTANH_MARGIN))


# ============================================================================
# Hyperboloid
# ============================================================================


def minkowski(a: np.ndarray, b: np.ndarray, keepdims: bool = True) -> np.ndarray:
    """Minkowski bilinear form −a₀b₀ + Σ aᵢbᵢ."""
    prod = a * b
    out = np.sum(prod[..., 1:], axis=-1, keepdims=keepdims) - (
        prod[..., :1] if keepdims else prod[..., 0]
    )
    return out


class Hyperboloid(Manifold):
    """Upper sheet {x : ⟨x,x⟩_M = −1, x₀ > 0} of dimension n in R^{n+1}."""

    name = "hyperboloid"

    def __init__(self, n: int = 2):
        self.dim = n
        super().__init__((n + 1,))

    @property
    def spec(self) -> ManifoldSpec:
        return ManifoldSpec(kind="hyperboloid", shape=(self.dim,))

    def inner(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        self.check_shape(x, u, v)
        return minkowski(u, v, keepdims=False)

    def proju(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        self.check_shape(x, u)
        return u + minkowski(x, u) * x

    def egrad2rgrad(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        # Flip the time component to turn the Euclidean gradient into the
        # Minkowski gradient, then project.
        g = np.array(g, copy=True)
        g[..., 0] = -g[..., 0]
        return self.proju(x, g)

    def projx(self, x: np.ndarray) -> np.ndarray:
        self.check_shape(x)
        if np.any(np.all(x == 0, axis=-1)):
            raise DegenerateInput("cannot project the zero vector onto the hyperboloid")
        # Timelike upper-sheet input is rescaled; anything else gets its
        # time coordinate recomputed from the spatial part.
        sq = minkowski(x, x)
        timelike = (x[..., :1] > 0) & (sq < 0)
        scaled = x / np.sqrt(np.where(timelike, -sq, 1.0))
        spatial = x[..., 1:]
        lifted = np.concatenate([np.sqrt(1.0 + _dot(spatial, spatial)), spatial], axis=-1)
        return np.where(timelike, scaled, lifted)

    def exp(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        nu = np.sqrt(np.maximum(minkowski(u, u), 0.0))
        return np.cosh(nu) * x + np.sinh(nu) * u / np.maximum(nu, MIN_NORM)

    def _residual(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(distance, y − αx, its Minkowski norm) with α = −⟨x,y⟩_M."""
        alpha = np.maximum(-minkowski(x, y), 1.0)
        w = y - alpha * x
        nw = np.sqrt(np.maximum(minkowski(w, w), 0.0))
        return np.arcsinh(nw), w, nw

    def log(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        d, w, nw = self._residual(x, y)
        return d * w / np.maximum(nw, MIN_NORM)

    def dist(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self._residual(x, y)[0][..., 0]

    def retr(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.projx(x + u)

    def ptransp(self, x: np.ndarray, y: np.ndarray, v: np.ndarray) -> np.ndarray:
        return v + minkowski(y, v) / (1.0 - minkowski(x, y)) * (x + y)

    def _random(self, batch_shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
        spatial = 0.5 * rng.standard_normal(batch_shape + (self.dim,))
        x0 = np.sqrt(1.0 + _dot(spatial, spatial))
        return np.concatenate([x0, spatial], axis=-1)

    def point_defect(self, x: np.ndarray) -> np.ndarray:
        defect = np.abs(minkowski(x, x, keepdims=False) + 1.0)
        return np.where(x[..., 0] > 0, defect, np.inf)


# ============================================================================
# Poincaré ball
# ============================================================================


def mobius_add(x: np.ndarray, y: np.ndarray, c: float) -> np.ndarray:
    """Möbius addition x ⊕_c y."""
    x2 = _dot(x, x)
    y2 = _dot(y, y)
    xy = _dot(x, y)
    num = (1 + 2 * c * xy + c * y2) * x + (1 - c * x2) * y
    denom = 1 + 2 * c * xy + c**2 * x2 * y2
    return num / np.maximum(denom, MIN_NORM)


def gyration(u: np.ndarray, v: np.ndarray, w: np.ndarray, c: float) -> np.ndarray:
    """Gyration gyr[u, v]w in closed form."""
    u2 = _dot(u, u)
    v2 = _dot(v, v)
    uv = _dot(u, v)
    uw = _dot(u, w)
    vw = _dot(v, w)
    k = -c
    a = -(k**2) * uw * v2 - k * vw + 2 * k**2 * uv * vw
    b = -(k**2) * vw * u2 + k * uw
    d = 1 - 2 * k * uv + k**2 * u2 * v2
    return w + 2 * (a * u + b * v) / np.maximum(d, MIN_NORM)


class PoincareBall(Manifold):
    """Open ball {x : c‖x‖² < 1} with the conformal metric λ_x² ⟨·,·⟩."""

    name = "poincare"

    def __init__(self, n: int = 2, c: float = 1.0):
        if c <= 0:
            raise ValueError(f"curvature must be positive, got {c}")
        self.c = float(c)
        super().__init__((n,))

    @property
    def spec(self) -> ManifoldSpec:
        return ManifoldSpec(kind="poincare", shape=self.point_shape, curvature=self.c)

    def lambda_x(self, x: np.ndarray, keepdims: bool = True) -> np.ndarray:
        """Conformal factor 2 / (1 − c‖x‖²)."""
        return 2.0 / np.maximum(1.0 - self.c * np.sum(x * x, axis=-1, keepdims=keepdims), MIN_NORM)

    def inner(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        self.check_shape(x, u, v)
        return self.lambda_x(x, keepdims=False) ** 2 * np.sum(u * v, axis=-1)

    def proju(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        self.check_shape(x, u)
        return np.broadcast_to(u, np.broadcast_shapes(np.shape(x), np.shape(u))).copy()

    def egrad2rgrad(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        return self.proju(x, g) / self.lambda_x(x) ** 2

    def projx(self, x: np.ndarray) -> np.ndarray:
        """Pull points back inside the ball, ``ball_eps`` away from the boundary."""
        self.check_shape(x)
        norm = np.maximum(np.linalg.norm(x, axis=-1, keepdims=True), MIN_NORM)
        maxnorm = (1.0 - get_settings().ball_eps(np.asarray(x).dtype)) / np.sqrt(self.c)
        return np.where(norm > maxnorm, x / norm * maxnorm, x)

    def exp(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        sc = np.sqrt(self.c)
        nu = np.linalg.norm(u, axis=-1, keepdims=True)
        second = np.tanh(sc * self.lambda_x(x) * nu / 2) * u / np.maximum(sc * nu, MIN_NORM)
        return self.projx(mobius_add(x, second, self.c))

    def log(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        sc = np.sqrt(self.c)
        w = mobius_add(-x, y, self.c)
        nw = np.linalg.norm(w, axis=-1, keepdims=True)
        scale = 2.0 / (sc * self.lambda_x(x)) * _artanh(sc * nw)
        return scale * w / np.maximum(nw, MIN_NORM)

    def dist(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        sc = np.sqrt(self.c)
        nw = np.linalg.norm(mobius_add(-x, y, self.c), axis=-1)
        return 2.0 / sc * _artanh(sc * nw)

    def retr(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.projx(x + u)

    def ptransp(self, x: np.ndarray, y: np.ndarray, v: np.ndarray) -> np.ndarray:
        return gyration(y, -x, v, self.c) * self.lambda_x(x) / self.lambda_x(y)

    # The closed form is cheap, so vector transport uses it too.
    transp = ptransp

    def _random(self, batch_shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
        direction = rng.standard_normal(batch_shape + self.point_shape)
        direction /= np.linalg.norm(direction, axis=-1, keepdims=True)
        radius = rng.uniform(0.0, 0.7, size=batch_shape + (1,)) / np.sqrt(self.c)
        return direction * radius

    def point_defect(self, x: np.ndarray) -> np.ndarray:
        inside = self.c * np.sum(x * x, axis=-1) < 1.0
        return np.where(inside & np.all(np.isfinite(x), axis=-1), 0.0, np.inf)
