"""Exception hierarchy for manifold-sgd.

Every error also derives from the closest builtin so that callers can
catch ``ValueError`` and friends without importing this module.
"""

from __future__ import annotations


class ManifoldSGDError(Exception):
    """Base class for all library errors."""


# ============================================================================
# Linear algebra
# ============================================================================


class ShapeError(ManifoldSGDError, ValueError):
    """Array shapes do not match the manifold or do not broadcast."""


class NotSymmetric(ManifoldSGDError, ValueError):
    """A symmetric-only operation received a non-symmetric matrix."""


class NotPositiveDefinite(ManifoldSGDError, ValueError):
    """A factorization or matrix function met a non-positive pivot/eigenvalue."""

    def __init__(self, message: str, pivot: int | None = None):
        super().__init__(message)
        self.pivot = pivot


class RankDeficient(ManifoldSGDError, ValueError):
    """QR input does not have full column rank."""

    def __init__(self, message: str, column: int):
        super().__init__(message)
        self.column = column


class Singular(ManifoldSGDError, ValueError):
    """Triangular system with a (numerically) zero diagonal entry."""


class EigenNonConvergence(ManifoldSGDError, RuntimeError):
    """The Jacobi eigensolver hit its sweep cap."""

    def __init__(self, message: str, sweeps: int):
        super().__init__(message)
        self.sweeps = sweeps


# ============================================================================
# Geometry
# ============================================================================


class DegenerateInput(ManifoldSGDError, ValueError):
    """Input cannot be projected onto the manifold (e.g. a zero vector)."""


class CutLocus(ManifoldSGDError, ValueError):
    """Logarithm requested for points outside the injectivity domain."""


class Unsupported(ManifoldSGDError, NotImplementedError):
    """Operator has no closed form on this manifold."""


# ============================================================================
# Optimization
# ============================================================================


class ConfigError(ManifoldSGDError, ValueError):
    """Optimizer hyperparameters outside their admissible ranges."""


class NonFiniteGradient(ManifoldSGDError, ValueError):
    """Gradient contains NaN or Inf."""


class CorruptCheckpoint(ManifoldSGDError, ValueError):
    """Checkpoint bytes are truncated, malformed or of an unknown version."""


# ============================================================================
# Checks and benchmarks
# ============================================================================


class NonFiniteObjective(ManifoldSGDError, ArithmeticError):
    """Objective evaluated to NaN or Inf."""


class NonDifferentiablePoint(NonFiniteObjective):
    """One-sided differences disagree: the objective has a kink at x."""


class UnknownProblem(ManifoldSGDError, KeyError):
    """No benchmark problem is registered under the requested name."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""
