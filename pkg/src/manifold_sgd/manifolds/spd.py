"""Symmetric positive definite matrices under three metrics."""

from __future__ import annotations

import numpy as np

from manifold_sgd.config import get_settings
from manifold_sgd.linalg import (
    cholesky,
    dexpm_sym,
    dlogm_spd,
    expm_sym,
    invsqrtm_spd,
    logm_spd,
    solve_triangular,
    sqrtm_spd,
    sym,
    transpose,
)
from manifold_sgd.manifolds.base import Manifold
from manifold_sgd.manifolds.cholesky import Cholesky, diagonal, strict_lower, with_diagonal
from manifold_sgd.models import ManifoldSpec


class _SPD(Manifold):
    """Shared pieces: symmetric tangent spaces, eigenvalue clipping, sampling."""

    def __init__(self, n: int = 3):
        super().__init__((n, n))

    @property
    def spec(self) -> ManifoldSpec:
        return ManifoldSpec(kind=self.name, shape=(self.point_shape[0],))  # type: ignore[arg-type]

    def proju(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        self.check_shape(x, u)
        return np.broadcast_to(sym(u), np.broadcast_shapes(np.shape(x), np.shape(u))).copy()

    def projx(self, x: np.ndarray) -> np.ndarray:
        """Symmetrize and clip eigenvalues from below at ``eig_floor``."""
        self.check_shape(x)
        w, q = np.linalg.eigh(sym(np.asarray(x)))
        w = np.maximum(w, get_settings().eig_floor)
        return sym((q * w[..., None, :]) @ transpose(q))

    def retr(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Second-order retraction X + U + ½·U·X⁻¹·U (stays SPD)."""
        return sym(x + u + 0.5 * u @ np.linalg.solve(x, u))

    def _random(self, batch_shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
        n = self.point_shape[0]
        q, _ = np.linalg.qr(rng.standard_normal(batch_shape + (n, n)))
        w = np.exp(0.5 * rng.standard_normal(batch_shape + (n,)))
        return sym((q * w[..., None, :]) @ transpose(q))

    def point_defect(self, x: np.ndarray) -> np.ndarray:
        asym = np.abs(x - transpose(x)).max(axis=(-2, -1))
        positive = np.linalg.eigvalsh(sym(x))[..., 0] > 0
        return np.where(positive, asym, np.inf)


class SPDAffineInvariant(_SPD):
    """SPD(n) with ⟨U, V⟩_X = tr(X⁻¹ U X⁻¹ V)."""

    name = "spd_affine"

    def inner(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        self.check_shape(x, u, v)
        a = np.linalg.solve(x, u)
        b = np.linalg.solve(x, v)
        return np.sum(a * transpose(b), axis=(-2, -1))

    def egrad2rgrad(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        return x @ sym(g) @ x

    def _whiten(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(X^{1/2}, X^{−1/2}, X^{−1/2} Y X^{−1/2})."""
        s = sqrtm_spd(x)
        si = invsqrtm_spd(x)
        return s, si, sym(si @ y @ si)

    def exp(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        s, _, m = self._whiten(x, u)
        return sym(s @ expm_sym(m) @ s)

    def log(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        s, _, m = self._whiten(x, y)
        return sym(s @ logm_spd(m) @ s)

    def dist(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        _, _, m = self._whiten(x, y)
        return np.linalg.norm(logm_spd(m), axis=(-2, -1))

    def ptransp(self, x: np.ndarray, y: np.ndarray, v: np.ndarray) -> np.ndarray:
        """E v Eᵀ with E = X^{1/2} (X^{−1/2} Y X^{−1/2})^{1/2} X^{−1/2}."""
        s, si, m = self._whiten(x, y)
        e = s @ sqrtm_spd(m) @ si
        return sym(e @ v @ transpose(e))


class SPDLogEuclidean(_SPD):
    """SPD(n) with the flat metric pulled back through the matrix logarithm."""

    name = "spd_log_euclidean"

    def inner(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        self.check_shape(x, u, v)
        x = np.broadcast_to(x, np.broadcast_shapes(np.shape(x), np.shape(u), np.shape(v)))
        return np.sum(dlogm_spd(x, sym(u)) * dlogm_spd(x, sym(v)), axis=(-2, -1))

    def egrad2rgrad(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        # dlogm at X is self-adjoint with inverse dexpm at log X
        lx = logm_spd(x)
        return dexpm_sym(lx, dexpm_sym(lx, sym(g)))

    def exp(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return expm_sym(logm_spd(x) + dlogm_spd(x, sym(u)))

    def log(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        lx = logm_spd(x)
        return dexpm_sym(lx, logm_spd(y) - lx)

    def dist(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.linalg.norm(logm_spd(y) - logm_spd(x), axis=(-2, -1))

    def ptransp(self, x: np.ndarray, y: np.ndarray, v: np.ndarray) -> np.ndarray:
        return dexpm_sym(logm_spd(y), dlogm_spd(x, sym(v)))


class SPDLogCholesky(_SPD):
    """SPD(n) isometric to the Cholesky manifold through X ↦ chol(X)."""

    name = "spd_log_cholesky"

    def __init__(self, n: int = 3):
        super().__init__(n)
        self._chol = Cholesky(n)

    def _dphi(self, low: np.ndarray, u: np.ndarray) -> np.ndarray:
        """L · Φ(L⁻¹ U L⁻ᵀ), Φ = strict lower part plus half the diagonal."""
        inner = solve_triangular(low, sym(u), lower=True)
        inner = solve_triangular(low, inner, lower=True, trans=True, side="right")
        return low @ with_diagonal(strict_lower(inner), 0.5 * diagonal(inner))

    @staticmethod
    def _dphi_inv(low: np.ndarray, w: np.ndarray) -> np.ndarray:
        return w @ transpose(low) + low @ transpose(w)

    def inner(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        self.check_shape(x, u, v)
        low = cholesky(x)
        return self._chol.inner(low, self._dphi(low, u), self._dphi(low, v))

    def egrad2rgrad(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        # Euclidean gradient of L ↦ f(L Lᵀ) is 2·sym(G)·L
        low = cholesky(x)
        return self._dphi_inv(low, self._chol.egrad2rgrad(low, 2.0 * sym(g) @ low))

    def exp(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        low = cholesky(x)
        moved = self._chol.exp(low, self._dphi(low, u))
        return moved @ transpose(moved)

    def retr(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        low = cholesky(x)
        moved = self._chol.retr(low, self._dphi(low, u))
        return moved @ transpose(moved)

    def log(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        low = cholesky(x)
        return self._dphi_inv(low, self._chol.log(low, cholesky(y)))

    def dist(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self._chol.dist(cholesky(x), cholesky(y))

    def ptransp(self, x: np.ndarray, y: np.ndarray, v: np.ndarray) -> np.ndarray:
        lx = cholesky(x)
        ly = cholesky(y)
        return self._dphi_inv(ly, self._chol.ptransp(lx, ly, self._dphi(lx, v)))
