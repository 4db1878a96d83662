"""Dense real linear-algebra kernel.

Every function accepts stacks of matrices: the last two axes are the matrix,
leading axes are an independent batch. Matrix functions of symmetric
arguments are evaluated through the eigendecomposition ``A = Q diag(w) Qᵀ``.
"""

from __future__ import annotations

from collections.abc import Callable
from typing import Literal

import numpy as np

from manifold_sgd.config import get_settings
from manifold_sgd.errors import (
    EigenNonConvergence,
    NotPositiveDefinite,
    NotSymmetric,
    RankDeficient,
    ShapeError,
    Singular,
)
from manifold_sgd.logging import get_logger

logger = get_logger(__name__)

# Relative gap below which divided differences use the limit value
CLOSE_EIGENVALUES = 1e-10


def _eps(dtype: np.dtype) -> float:
    return float(np.finfo(dtype).eps)


def _as_float(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    if a.dtype not in (np.float32, np.float64):
        a = a.astype(np.float64)
    return a


def _require_square(a: np.ndarray, name: str = "A") -> None:
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ShapeError(f"{name} must be a (stack of) square matrices, got shape {a.shape}")


def transpose(a: np.ndarray) -> np.ndarray:
    """Swap the two trailing axes."""
    return np.swapaxes(a, -1, -2)


def sym(a: np.ndarray) -> np.ndarray:
    """Symmetric part (A + Aᵀ)/2."""
    return 0.5 * (a + transpose(a))


def skew(a: np.ndarray) -> np.ndarray:
    """Skew-symmetric part (A − Aᵀ)/2."""
    return 0.5 * (a - transpose(a))


def sym_tol(a: np.ndarray) -> np.ndarray:
    """Admissible asymmetry for ``a``: relative to its largest entry."""
    rel = 1e-8 if a.dtype == np.float64 else 1e-4
    return rel * np.maximum(np.abs(a).max(axis=(-2, -1)), 1.0)


def require_symmetric(a: np.ndarray, name: str = "A") -> np.ndarray:
    """Reject matrices that are not symmetric within ``sym_tol``; return sym(a)."""
    a = _as_float(a)
    _require_square(a, name)
    asym = np.abs(a - transpose(a)).max(axis=(-2, -1))
    if np.any(asym > sym_tol(a)):
        raise NotSymmetric(f"{name} is not symmetric: max|A - Aᵀ| = {float(np.max(asym)):.3e}")
    return sym(a)


# ============================================================================
# Eigendecomposition
# ============================================================================


def _jacobi_eig(a: np.ndarray, max_sweeps: int) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi rotations, vectorized over the batch."""
    n = a.shape[-1]
    batch = a.shape[:-2]
    a = a.reshape(-1, n, n).copy()
    q = np.broadcast_to(np.eye(n, dtype=a.dtype), a.shape).copy()

    rel = 1e-14 if a.dtype == np.float64 else 1e-6
    threshold = rel * np.linalg.norm(a, axis=(-2, -1))
    off_mask = ~np.eye(n, dtype=bool)

    for sweep in range(max_sweeps + 1):
        off = np.sqrt((a[:, off_mask] ** 2).sum(axis=-1))
        if np.all(off <= threshold):
            logger.debug(f"Jacobi converged after {sweep} sweeps (n={n})")
            break
        if sweep == max_sweeps:
            raise EigenNonConvergence(
                f"Jacobi eigensolver did not converge after {sweep} sweeps "
                f"(off-diagonal norm {float(off.max()):.3e})",
                sweeps=sweep,
            )
        for p in range(n - 1):
            for r in range(p + 1, n):
                apr = a[:, p, r]
                active = apr != 0
                if not np.any(active):
                    continue
                safe = np.where(active, apr, 1.0)
                theta = (a[:, r, r] - a[:, p, p]) / (2.0 * safe)
                t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                c = c[:, None]
                s = s[:, None]

                cp, cr = a[:, :, p].copy(), a[:, :, r].copy()
                a[:, :, p] = c * cp - s * cr
                a[:, :, r] = s * cp + c * cr
                rp, rr = a[:, p, :].copy(), a[:, r, :].copy()
                a[:, p, :] = c * rp - s * rr
                a[:, r, :] = s * rp + c * rr
                vp, vr = q[:, :, p].copy(), q[:, :, r].copy()
                q[:, :, p] = c * vp - s * vr
                q[:, :, r] = s * vp + c * vr

    w = np.diagonal(a, axis1=-2, axis2=-1)
    order = np.argsort(w, axis=-1)
    w = np.take_along_axis(w, order, axis=-1)
    q = np.take_along_axis(q, order[:, None, :], axis=-1)
    return w.reshape(*batch, n), q.reshape(*batch, n, n)


def sym_eig(
    a: np.ndarray,
    *,
    method: Literal["eigh", "jacobi"] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Eigendecomposition of a symmetric matrix.

    Args:
        a: Symmetric matrix or stack of matrices.
        method: ``"eigh"`` (LAPACK) or ``"jacobi"``; defaults to settings.

    Returns:
        ``(w, q)`` with eigenvalues ascending and orthogonal ``q`` such that
        ``a = q @ diag(w) @ q.T``.

    Raises:
        NotSymmetric: If ``a`` is not symmetric within ``sym_tol``.
        EigenNonConvergence: If the Jacobi solver exceeds its sweep cap.
    """
    a = require_symmetric(a)
    settings = get_settings()
    method = method or settings.eig_method
    if method == "jacobi":
        return _jacobi_eig(a, settings.jacobi_max_sweeps)
    w, q = np.linalg.eigh(a)
    return w, q


def _reconstruct(w: np.ndarray, q: np.ndarray) -> np.ndarray:
    return (q * w[..., None, :]) @ transpose(q)


def _spectral(a: np.ndarray, fn: Callable[[np.ndarray], np.ndarray], *, positive: bool) -> np.ndarray:
    w, q = sym_eig(a)
    if positive and np.any(w <= 0):
        raise NotPositiveDefinite(
            f"matrix is not positive definite: smallest eigenvalue {float(w.min()):.3e}"
        )
    return _reconstruct(fn(w), q)


def expm_sym(a: np.ndarray) -> np.ndarray:
    """Matrix exponential of a symmetric matrix (result is SPD)."""
    return _spectral(a, np.exp, positive=False)


def logm_spd(a: np.ndarray) -> np.ndarray:
    """Principal matrix logarithm of an SPD matrix."""
    return _spectral(a, np.log, positive=True)


def sqrtm_spd(a: np.ndarray) -> np.ndarray:
    """SPD square root."""
    return _spectral(a, np.sqrt, positive=True)


def invsqrtm_spd(a: np.ndarray) -> np.ndarray:
    """Inverse SPD square root."""
    return _spectral(a, lambda w: 1.0 / np.sqrt(w), positive=True)


def powm_spd(a: np.ndarray, p: float) -> np.ndarray:
    """Real power of an SPD matrix."""
    return _spectral(a, lambda w: w**p, positive=True)


# ============================================================================
# Fréchet derivatives (Daleckii–Krein)
# ============================================================================


def _daleckii_krein(q: np.ndarray, f1: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Q (F ∘ (Qᵀ U Q)) Qᵀ."""
    return q @ (f1 * (transpose(q) @ u @ q)) @ transpose(q)


def _log_divided_differences(w: np.ndarray) -> np.ndarray:
    wi = w[..., :, None]
    wj = w[..., None, :]
    d = wi - wj
    close = np.abs(d) < CLOSE_EIGENVALUES * np.maximum(wi, wj)
    safe = np.where(close, 1.0, d)
    # log(wi/wj) written as log1p to avoid cancellation for nearby eigenvalues
    f1 = np.log1p(safe / wj) / safe
    return np.where(close, 2.0 / (wi + wj), f1)


def _exp_divided_differences(w: np.ndarray) -> np.ndarray:
    wi = w[..., :, None]
    wj = w[..., None, :]
    d = wi - wj
    close = np.abs(d) < CLOSE_EIGENVALUES * np.maximum(np.maximum(np.abs(wi), np.abs(wj)), 1.0)
    safe = np.where(close, 1.0, d)
    f1 = np.exp(wj) * np.expm1(safe) / safe
    return np.where(close, np.exp(0.5 * (wi + wj)), f1)


def dlogm_spd(a: np.ndarray, u: np.ndarray) -> np.ndarray:
    """
    Fréchet derivative of the matrix logarithm at SPD ``a`` in direction ``u``.

    Raises:
        NotPositiveDefinite: If ``a`` has a non-positive eigenvalue.
    """
    u = require_symmetric(u, "U")
    w, q = sym_eig(a)
    if np.any(w <= 0):
        raise NotPositiveDefinite(
            f"matrix is not positive definite: smallest eigenvalue {float(w.min()):.3e}"
        )
    return _daleckii_krein(q, _log_divided_differences(w), u)


def dexpm_sym(a: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Fréchet derivative of the matrix exponential at symmetric ``a``."""
    u = require_symmetric(u, "U")
    w, q = sym_eig(a)
    return _daleckii_krein(q, _exp_divided_differences(w), u)


# ============================================================================
# Factorizations and solves
# ============================================================================


def _failed_pivot(a: np.ndarray) -> tuple[int, int]:
    """Locate (batch row, pivot) of the first non-positive Cholesky pivot."""
    n = a.shape[-1]
    flat = a.reshape(-1, n, n)
    for b, m in enumerate(flat):
        low = np.zeros_like(m)
        for j in range(n):
            d = m[j, j] - low[j, :j] @ low[j, :j]
            if not d > 0:
                return b, j
            low[j, j] = np.sqrt(d)
            low[j + 1 :, j] = (m[j + 1 :, j] - low[j + 1 :, :j] @ low[j, :j]) / low[j, j]
    return -1, -1


def cholesky(a: np.ndarray) -> np.ndarray:
    """
    Cholesky factor ``L`` (lower triangular, positive diagonal) with ``L Lᵀ = A``.

    Raises:
        NotSymmetric: If ``a`` is not symmetric.
        NotPositiveDefinite: On a non-positive pivot; ``pivot`` names its index.
    """
    a = require_symmetric(a)
    try:
        low = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        row, pivot = _failed_pivot(a)
        raise NotPositiveDefinite(
            f"non-positive pivot at index {pivot} (batch row {row})", pivot=pivot
        ) from None

    scale = np.maximum(np.abs(a).max(axis=(-2, -1)), np.finfo(a.dtype).tiny)
    residual = np.abs(low @ transpose(low) - a).max(axis=(-2, -1)) / scale
    if np.any(residual > 1e3 * a.shape[-1] * _eps(a.dtype)):
        row, pivot = _failed_pivot(a)
        raise NotPositiveDefinite(
            f"Cholesky reconstruction failed (relative residual {float(residual.max()):.3e})",
            pivot=pivot if pivot >= 0 else None,
        )
    return low


def qr_signfix(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Thin QR with the sign convention ``diag(R) > 0``.

    Raises:
        ShapeError: If the matrix has more columns than rows.
        RankDeficient: If some ``|R_ii|`` falls below the rank tolerance.
    """
    a = _as_float(a)
    if a.ndim < 2 or a.shape[-2] < a.shape[-1]:
        raise ShapeError(f"qr_signfix needs n >= p, got shape {a.shape}")
    q, r = np.linalg.qr(a)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    rank_tol = 1e3 * _eps(a.dtype) * np.maximum(np.abs(r).max(axis=(-2, -1)), np.finfo(a.dtype).tiny)
    small = np.abs(d) <= rank_tol[..., None]
    if np.any(small):
        column = int(np.argwhere(small)[0][-1])
        raise RankDeficient(f"matrix is rank deficient at column {column}", column=column)
    sign = np.where(d < 0, -1.0, 1.0).astype(a.dtype)
    return q * sign[..., None, :], r * sign[..., :, None]


def solve_triangular(
    low: np.ndarray,
    b: np.ndarray,
    *,
    lower: bool = True,
    trans: bool = False,
    side: Literal["left", "right"] = "left",
) -> np.ndarray:
    """
    Solve a triangular system.

    ``side="left"`` solves ``op(L) X = B``; ``side="right"`` solves
    ``X op(L) = B``, where ``op`` transposes when ``trans`` is set. The
    triangle opposite to ``lower`` is ignored. ``b`` may be a vector.

    Raises:
        Singular: If a diagonal entry of ``L`` is numerically zero.
    """
    low = _as_float(low)
    b = _as_float(b)
    _require_square(low, "L")
    tri = np.tril(low) if lower else np.triu(low)
    diag = np.abs(np.diagonal(tri, axis1=-2, axis2=-1))
    rank_tol = np.finfo(tri.dtype).tiny ** 0.5
    if np.any(diag <= rank_tol):
        index = int(np.argwhere(diag <= rank_tol)[0][-1])
        raise Singular(f"triangular matrix is singular at diagonal index {index}")

    op = transpose(tri) if trans else tri
    vector = b.ndim == low.ndim - 1
    rhs = b[..., None] if vector else b
    if side == "right":
        out = transpose(np.linalg.solve(transpose(op), transpose(rhs)))
    else:
        out = np.linalg.solve(op, rhs)
    return out[..., 0] if vector else out
