"""Numerical verification: finite-difference gradients and the manifold property suite."""

from __future__ import annotations

from collections.abc import Callable
from typing import TYPE_CHECKING

import numpy as np

from manifold_sgd.errors import ManifoldSGDError, NonDifferentiablePoint, NonFiniteObjective
from manifold_sgd.logging import get_logger
from manifold_sgd.manifolds import Manifold, Product, build_manifold
from manifold_sgd.models import CheckRecord, CheckReport, ManifoldSpec

if TYPE_CHECKING:
    from manifold_sgd.problems import Problem

logger = get_logger(__name__)

DEFAULT_H = 1e-6
DEFAULT_TOL = 1e-5

# Property tolerances for double precision
TOLERANCES: dict[str, float] = {
    "proju_idempotence": 1e-10,
    "exp_membership": 1e-9,
    "retr_membership": 1e-9,
    "exp_log_inverse": 1e-6,
    "zero_laws": 1e-12,
    "geodesic_length": 1e-8,
    "ptransp_isometry": 1e-8,
    # expressed as 2 − slope, i.e. slope >= 1.9
    "retraction_order": 0.1,
    "componentwise": 0.0,
}

RETRACTION_STEPS = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
MIN_SLOPE_POINTS = 4
TANGENT_NORM_RANGE = (0.05, 0.5)


# ============================================================================
# Gradients
# ============================================================================


def _evaluate(f: Callable[[np.ndarray], float], x: np.ndarray) -> float:
    value = float(f(x))
    if not np.isfinite(value):
        raise NonFiniteObjective(f"objective evaluated to {value}")
    return value


def central_diff_grad(
    f: Callable[[np.ndarray], float],
    x: np.ndarray,
    h: float = DEFAULT_H,
    *,
    detect_kinks: bool = True,
) -> np.ndarray:
    """
    Central finite-difference gradient of a scalar field over an ambient array.

    Args:
        f: Objective taking an array shaped like ``x``
        x: Evaluation point
        h: Step size
        detect_kinks: Compare one-sided differences to flag non-smooth points

    Returns:
        Array shaped like ``x``

    Raises:
        NonFiniteObjective: If any evaluation is NaN or infinite
        NonDifferentiablePoint: If one-sided slopes disagree beyond √h (kink)
    """
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    f0 = _evaluate(f, x) if detect_kinks else 0.0
    flat = grad.reshape(-1)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h
        e = e.reshape(x.shape)
        fp = _evaluate(f, x + e)
        fm = _evaluate(f, x - e)
        central = (fp - fm) / (2 * h)
        if detect_kinks:
            forward = (fp - f0) / h
            backward = (f0 - fm) / h
            if abs(forward - backward) > np.sqrt(h) * max(1.0, abs(central)):
                raise NonDifferentiablePoint(
                    f"one-sided slopes {backward:.3e} and {forward:.3e} disagree at coordinate {i}"
                )
        flat[i] = central
    return grad


def check_gradient(
    problem: Problem,
    x: np.ndarray | None = None,
    h: float = DEFAULT_H,
    tol: float = DEFAULT_TOL,
) -> CheckReport:
    """
    Compare a problem's analytic gradient with central differences.

    Problems with a native Riemannian gradient are compared against the
    finite-difference gradient converted by ``egrad2rgrad``.
    """
    x = problem.initial_point() if x is None else np.asarray(x)
    fd = central_diff_grad(problem.loss, x, h)
    analytic = np.asarray(problem.grad(x))
    if problem.riemannian:
        fd = problem.manifold.egrad2rgrad(x, fd)
    error = float(np.linalg.norm(analytic - fd) / max(1.0, float(np.linalg.norm(fd))))
    record = CheckRecord(property="gradient", trials=1, max_error=error, tol=tol, passed=error <= tol)
    logger.info("gradient check %s: relative error %.3e (tol %.1e)", problem.name, error, tol)
    return CheckReport(subject=problem.name, records=[record])


# ============================================================================
# Manifold property suite
# ============================================================================


class _Sample:
    """Seeded points and short tangent vectors shared by every property."""

    def __init__(self, manifold: Manifold, trials: int, seed: int):
        rng = np.random.default_rng(seed)
        self.x = manifold.random((trials,), seed=rng)
        self.u = self._tangent(manifold, rng)
        self.v = self._tangent(manifold, rng)
        self.w = self._tangent(manifold, rng)

    def _tangent(self, manifold: Manifold, rng: np.random.Generator) -> np.ndarray:
        direction = manifold.random_tangent(self.x, seed=rng)
        scale = rng.uniform(*TANGENT_NORM_RANGE, size=direction.shape[: direction.ndim - manifold.ndims])
        return direction * manifold._expand(scale)


def _max_abs(manifold: Manifold, a: np.ndarray) -> np.ndarray:
    return np.abs(a).max(axis=manifold._axes, initial=0.0) if manifold.ndims else np.abs(a)


def _proju_idempotence(m: Manifold, s: _Sample) -> np.ndarray:
    pu = m.proju(s.x, s.u)
    return _max_abs(m, m.proju(s.x, pu) - pu)


def _exp_membership(m: Manifold, s: _Sample) -> np.ndarray | None:
    return m.point_defect(m.exp(s.x, s.u)) if m.has_exp else None


def _retr_membership(m: Manifold, s: _Sample) -> np.ndarray:
    return m.point_defect(m.retr(s.x, s.u))


def _exp_log_inverse(m: Manifold, s: _Sample) -> np.ndarray | None:
    if not (m.has_exp and m.has_log):
        return None
    back = m.log(s.x, m.exp(s.x, s.u))
    return m.norm(s.x, back - s.u) / m.norm(s.x, s.u)


def _zero_laws(m: Manifold, s: _Sample) -> np.ndarray:
    zero = np.zeros_like(s.u)
    scale = np.maximum(_max_abs(m, s.x), 1.0)
    errors = [_max_abs(m, m.retr(s.x, zero) - s.x)]
    if m.has_exp:
        errors.append(_max_abs(m, m.exp(s.x, zero) - s.x))
    if m.has_log:
        errors.append(_max_abs(m, m.log(s.x, s.x)))
    return np.maximum.reduce(errors) / scale


def _geodesic_length(m: Manifold, s: _Sample) -> np.ndarray | None:
    if not (m.has_exp and m.has_log):
        return None
    length = m.norm(s.x, s.u)
    return np.abs(m.dist(s.x, m.exp(s.x, s.u)) - length) / length


def _ptransp_isometry(m: Manifold, s: _Sample) -> np.ndarray | None:
    if not m.has_ptransp:
        return None
    y = m.step(s.x, s.u)
    pv = m.ptransp(s.x, y, s.v)
    pw = m.ptransp(s.x, y, s.w)
    scale = m.norm(s.x, s.v) * m.norm(s.x, s.w)
    isometry = np.abs(m.inner(y, pv, pw) - m.inner(s.x, s.v, s.w)) / scale
    identity = m.norm(s.x, m.ptransp(s.x, s.x, s.v) - s.v) / m.norm(s.x, s.v)
    return np.maximum(isometry, identity)


def _retraction_order(m: Manifold, s: _Sample) -> np.ndarray | None:
    """Per trial ``2 − slope`` of log‖retr − exp‖ against log t; None if retr = exp."""
    if not m.has_exp:
        return None
    ts = np.asarray(RETRACTION_STEPS)
    gaps = np.stack([_max_abs(m, m.retr(s.x, t * s.u) - m.exp(s.x, t * s.u)) for t in ts], axis=-1)
    floor = 1e3 * np.finfo(float).eps * np.maximum(_max_abs(m, s.x), 1.0)
    out = []
    for row, fl in zip(gaps.reshape(-1, ts.size), np.broadcast_to(floor, gaps.shape[:-1]).reshape(-1)):
        valid = row > fl
        if valid.sum() < MIN_SLOPE_POINTS:
            continue
        slope = np.polyfit(np.log(ts[valid]), np.log(row[valid]), 1)[0]
        out.append(2.0 - slope)
    return np.asarray(out) if out else None


def _componentwise(m: Manifold, s: _Sample) -> np.ndarray | None:
    if not isinstance(m, Product):
        return None
    errors = []
    inner_ref = np.asarray(0.0)
    for i, c in enumerate(m.components):
        xi, ui, vi = (m.take(a, i) for a in (s.x, s.u, s.v))
        errors.append(_max_abs(c, m.take(m.proju(s.x, s.u), i) - c.proju(xi, ui)))
        errors.append(_max_abs(c, m.take(m.retr(s.x, s.u), i) - c.retr(xi, ui)))
        if c.has_exp and m.has_exp:
            errors.append(_max_abs(c, m.take(m.exp(s.x, s.u), i) - c.exp(xi, ui)))
        inner_ref = inner_ref + c.inner(xi, ui, vi)
    errors.append(np.abs(m.inner(s.x, s.u, s.v) - inner_ref))
    return np.maximum.reduce([np.broadcast_to(e, errors[-1].shape) for e in errors])


PROPERTIES: dict[str, Callable[[Manifold, _Sample], np.ndarray | None]] = {
    "proju_idempotence": _proju_idempotence,
    "exp_membership": _exp_membership,
    "retr_membership": _retr_membership,
    "exp_log_inverse": _exp_log_inverse,
    "zero_laws": _zero_laws,
    "geodesic_length": _geodesic_length,
    "ptransp_isometry": _ptransp_isometry,
    "retraction_order": _retraction_order,
    "componentwise": _componentwise,
}


def run_manifold_suite(
    subject: ManifoldSpec | Manifold,
    trials: int = 100,
    seed: int = 0,
    tol: float | None = None,
) -> CheckReport:
    """
    Run every applicable property on seeded random points.

    Args:
        subject: Descriptor or manifold instance to verify
        trials: Number of random (x, u, v, w) tuples
        seed: Seed for the sample; reports are reproducible per seed
        tol: Overrides every property tolerance except the retraction order

    Returns:
        CheckReport with one record per property; inapplicable properties
        are recorded with ``trials == 0``. Operator errors are reported as
        failures with infinite error.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    manifold = subject if isinstance(subject, Manifold) else build_manifold(subject)
    sample = _Sample(manifold, trials, seed)
    records = []
    for name, prop in PROPERTIES.items():
        limit = TOLERANCES[name] if tol is None or name == "retraction_order" else tol
        if name == "componentwise" and not isinstance(manifold, Product):
            continue
        try:
            errors = prop(manifold, sample)
        except (ManifoldSGDError, FloatingPointError) as e:
            logger.warning("%s on %r raised %s: %s", name, manifold, type(e).__name__, e)
            records.append(CheckRecord(property=name, trials=trials, max_error=float("inf"), tol=limit, passed=False))
            continue
        if errors is None:
            records.append(CheckRecord(property=name, trials=0, max_error=0.0, tol=limit, passed=True))
            continue
        errors = np.asarray(errors, dtype=float).reshape(-1)
        worst = float(np.max(errors)) if np.all(np.isfinite(errors)) else float("inf")
        records.append(
            CheckRecord(
                property=name, trials=errors.size, max_error=worst, tol=limit, passed=worst <= limit
            )
        )
        logger.debug("%s: max error %.3e over %d trial(s)", name, worst, errors.size)

    report = CheckReport(subject=manifold.spec.label(), seed=seed, records=records)
    failed = [r.property for r in records if not r.passed]
    logger.info(
        "suite %s: %s", report.subject, "pass" if report.passed else f"FAIL ({', '.join(failed)})"
    )
    return report
