"""Pydantic models for manifold descriptors, optimizer configuration,
verification reports and optimization traces.
"""

from __future__ import annotations

from math import nan, prod
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from manifold_sgd.config import Precision

# ============================================================================
# Geometry
# ============================================================================

ManifoldKind = Literal[
    "euclidean",
    "sphere",
    "hyperboloid",
    "poincare",
    "stiefel",
    "grassmannian",
    "so",
    "spd_affine",
    "spd_log_euclidean",
    "spd_log_cholesky",
    "cholesky",
    "product",
]

_VECTOR_KINDS = {"sphere", "hyperboloid", "poincare"}
_SQUARE_KINDS = {"so", "spd_affine", "spd_log_euclidean", "spd_log_cholesky", "cholesky"}
_FRAME_KINDS = {"stiefel", "grassmannian"}


class ManifoldSpec(BaseModel):
    """Identifies a geometry: kind, trailing-axis shape and metric parameters.

    ``shape`` holds the defining dimensions: ``(n,)`` for Sphere (ambient
    dimension), Hyperboloid (intrinsic dimension) and Poincaré, ``(n, p)``
    for Stiefel/Grassmannian, ``(n,)`` for the square-matrix kinds and any
    tuple (possibly empty) for Euclidean.
    """

    model_config = ConfigDict(frozen=True)

    kind: ManifoldKind
    shape: tuple[int, ...] = ()
    curvature: float = Field(1.0, gt=0, description="Poincaré curvature c")
    components: tuple[ManifoldSpec, ...] = ()

    @model_validator(mode="after")
    def _check_shape(self) -> ManifoldSpec:
        if any(d < 1 for d in self.shape):
            raise ValueError(f"shape dimensions must be >= 1, got {self.shape}")
        if self.kind == "product":
            if not self.components or self.shape:
                raise ValueError("product needs components and no shape of its own")
        elif self.components:
            raise ValueError(f"{self.kind} does not take components")
        if self.kind in _VECTOR_KINDS | _SQUARE_KINDS and len(self.shape) != 1:
            raise ValueError(f"{self.kind} expects shape (n,), got {self.shape}")
        if self.kind in _FRAME_KINDS:
            if len(self.shape) != 2 or self.shape[0] < self.shape[1]:
                raise ValueError(f"{self.kind} expects shape (n, p) with n >= p, got {self.shape}")
        return self

    @property
    def point_size(self) -> int:
        """Number of scalar coordinates of one point."""
        if self.kind == "product":
            return sum(c.point_size for c in self.components)
        n = self.shape[0] if self.shape else 1
        if self.kind == "sphere" or self.kind == "poincare":
            return n
        if self.kind == "hyperboloid":
            return n + 1
        if self.kind in _SQUARE_KINDS:
            return n * n
        return prod(self.shape)

    def label(self) -> str:
        """Short human-readable name, e.g. ``sphere(3)``."""
        if self.kind == "product":
            return " x ".join(c.label() for c in self.components)
        dims = ",".join(str(d) for d in self.shape)
        if self.kind == "poincare" and self.curvature != 1.0:
            return f"poincare({dims};c={self.curvature:g})"
        return f"{self.kind}({dims})"


# ============================================================================
# Optimizers
# ============================================================================

Algorithm = Literal["rsgd", "crmsprop", "radam"]


class OptimizerConfig(BaseModel):
    """Hyperparameters of a Riemannian optimizer."""

    model_config = ConfigDict(frozen=True)

    algorithm: Algorithm = "rsgd"
    learning_rate: float = Field(1e-3, gt=0)
    momentum: float = Field(0.0, ge=0, lt=1, description="RSGD momentum")
    rho: float = Field(0.9, ge=0, lt=1, description="CRMSProp decay")
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    amsgrad: bool = False
    epsilon: float = Field(1e-8, gt=0)
    use_exact_transport: bool = True
    use_exp: bool = True
    stabilize: int | None = Field(None, ge=1, description="re-project every k steps")


# ============================================================================
# Verification
# ============================================================================


class CheckRecord(BaseModel):
    """Outcome of one verified property.

    ``trials == 0`` marks a property that does not apply (skipped).
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    property: str
    trials: int = Field(..., ge=0)
    max_error: float
    tol: float
    passed: bool = Field(..., alias="pass")

    @property
    def skipped(self) -> bool:
        return self.trials == 0


class CheckReport(BaseModel):
    """Collection of property records; passes iff every record passes."""

    subject: str
    seed: int | None = None
    records: list[CheckRecord] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def record(self, name: str) -> CheckRecord:
        """Look up a record by property name."""
        for r in self.records:
            if r.property == name:
                return r
        raise KeyError(name)

    def to_json_dict(self) -> dict[str, Any]:
        """Dict with stable key order (property, trials, max_error, tol, pass)."""
        return {
            "subject": self.subject,
            "seed": self.seed,
            "pass": self.passed,
            "records": [r.model_dump(by_alias=True) for r in self.records],
        }


# ============================================================================
# Traces
# ============================================================================


class TraceRow(BaseModel):
    """One optimization step."""

    model_config = ConfigDict(frozen=True)

    step: int = Field(..., ge=0)
    loss: float
    grad_norm: float
    dist_to_opt: float | None = None


class Trace(BaseModel):
    """Per-step record of a benchmark run."""

    run_id: str | None = None
    problem: str
    config: OptimizerConfig
    seed: int
    precision: Precision = "double"
    optimal_value: float | None = None
    rows: list[TraceRow] = Field(default_factory=list)
    aborted: bool = False

    @model_validator(mode="after")
    def _steps_increasing(self) -> Trace:
        steps = [r.step for r in self.rows]
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValueError("trace steps must be strictly increasing")
        return self

    @property
    def has_distance(self) -> bool:
        return any(r.dist_to_opt is not None for r in self.rows)

    @property
    def last_step(self) -> int:
        return self.rows[-1].step if self.rows else 0

    @property
    def initial_loss(self) -> float:
        """Objective at the first row; NaN for a run aborted before any row."""
        return self.rows[0].loss if self.rows else nan

    @property
    def final_loss(self) -> float:
        return self.rows[-1].loss if self.rows else nan


class TraceComparison(BaseModel):
    """Comparison between two traces over their common steps."""

    before_id: str
    after_id: str

    steps_compared: int
    final_loss_before: float
    final_loss_after: float
    loss_change: float
    max_abs_loss_diff: float
    max_rel_loss_diff: float

    improved: bool
    summary_text: str
