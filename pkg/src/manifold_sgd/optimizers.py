"""Riemannian first-order optimizers: RSGD, constrained RMSProp and Riemannian Adam.

Every algorithm is a row kernel ``(manifold, config, t, x, g, slots) -> x'``
that updates its slots in place. Dense updates run the kernel on the whole
binding; sparse updates run the same kernel on the rows that can change
(touched rows plus rows whose accumulators are still non-zero), which
reproduces the dense update with a zero-filled gradient.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from pydantic import ValidationError

from manifold_sgd.errors import ConfigError, NonFiniteGradient, ShapeError
from manifold_sgd.logging import get_logger
from manifold_sgd.manifolds import Euclidean, Manifold
from manifold_sgd.models import OptimizerConfig

logger = get_logger(__name__)

Slots = dict[str, np.ndarray]


def optimizer_config(**kwargs: Any) -> OptimizerConfig:
    """Build an ``OptimizerConfig``; range violations raise ``ConfigError``."""
    try:
        return OptimizerConfig(**kwargs)
    except ValidationError as e:
        raise ConfigError(f"invalid optimizer configuration: {e}") from e


@dataclass
class ParameterBinding:
    """A named array of points optimized on ``manifold``.

    Parameters without an explicit manifold are treated as Euclidean data,
    one scalar per point.
    """

    name: str
    values: np.ndarray
    manifold: Manifold = field(default_factory=lambda: Euclidean(()))

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values)
        self.manifold.check_shape(self.values)

    @property
    def rows(self) -> int:
        """Length of the leading batch axis (0 for a single point)."""
        if self.values.ndim == self.manifold.ndims:
            return 0
        return self.values.shape[0]


@dataclass
class OptimizerState:
    """Step counters and slot arrays, keyed by binding name."""

    config: OptimizerConfig
    steps: dict[str, int] = field(default_factory=dict)
    slots: dict[str, Slots] = field(default_factory=dict)

    def step(self, name: str) -> int:
        return self.steps[name]


# ============================================================================
# Kernels
# ============================================================================


def _rgrad(manifold: Manifold, x: np.ndarray, g: np.ndarray, riemannian: bool) -> np.ndarray:
    return manifold.proju(x, g) if riemannian else manifold.egrad2rgrad(x, g)


def _rsgd(
    manifold: Manifold, cfg: OptimizerConfig, t: int, x: np.ndarray, g: np.ndarray, slots: Slots,
    riemannian: bool,
) -> np.ndarray:
    r = _rgrad(manifold, x, g, riemannian)
    if cfg.momentum == 0:
        return manifold.step(x, -cfg.learning_rate * r, cfg.use_exp)
    buf = cfg.momentum * slots["momentum"] + r
    new = manifold.step(x, -cfg.learning_rate * buf, cfg.use_exp)
    slots["momentum"] = manifold.transport(x, new, buf, cfg.use_exact_transport)
    return new


def _crmsprop(
    manifold: Manifold, cfg: OptimizerConfig, t: int, x: np.ndarray, g: np.ndarray, slots: Slots,
    riemannian: bool,
) -> np.ndarray:
    prev = slots["prev"]
    acc = cfg.rho * manifold.transport(prev, x, slots["m"], cfg.use_exact_transport)
    acc = acc + (1 - cfg.rho) * manifold.proju(x, g * g)
    r = _rgrad(manifold, x, g, riemannian)
    # elementwise quotient in ambient coordinates, then back to the tangent space
    direction = manifold.proju(x, r / (np.sqrt(np.maximum(acc, 0.0)) + cfg.epsilon))
    slots["m"] = acc
    slots["prev"] = np.array(x, copy=True)
    return manifold.step(x, -cfg.learning_rate * direction, cfg.use_exp)


def _radam(
    manifold: Manifold, cfg: OptimizerConfig, t: int, x: np.ndarray, g: np.ndarray, slots: Slots,
    riemannian: bool,
) -> np.ndarray:
    r = _rgrad(manifold, x, g, riemannian)
    m = cfg.beta1 * slots["m"] + (1 - cfg.beta1) * r
    v = cfg.beta2 * slots["v"] + (1 - cfg.beta2) * manifold.inner(x, r, r)
    m_hat = m / (1 - cfg.beta1**t)
    v_hat = v / (1 - cfg.beta2**t)
    if cfg.amsgrad:
        v_hat = np.maximum(slots["vhat"], v_hat)
        slots["vhat"] = v_hat
    denom = manifold._expand(np.sqrt(v_hat) + cfg.epsilon)
    new = manifold.step(x, -cfg.learning_rate * m_hat / denom, cfg.use_exp)
    slots["m"] = manifold.transport(x, new, m, cfg.use_exact_transport)
    slots["v"] = v
    return new


Kernel = Callable[
    [Manifold, OptimizerConfig, int, np.ndarray, np.ndarray, Slots, bool], np.ndarray
]

KERNELS: dict[str, Kernel] = {
    "rsgd": _rsgd,
    "crmsprop": _crmsprop,
    "radam": _radam,
}

# Slots that only change where a gradient has been seen; "prev" is excluded.
_ACCUMULATORS = ("momentum", "m", "v", "vhat")


# ============================================================================
# Public API
# ============================================================================


def _new_slots(cfg: OptimizerConfig, binding: ParameterBinding) -> Slots:
    values = binding.values
    batch = values.shape[: values.ndim - binding.manifold.ndims]
    if cfg.algorithm == "rsgd":
        return {"momentum": np.zeros_like(values)} if cfg.momentum > 0 else {}
    if cfg.algorithm == "crmsprop":
        return {"m": np.zeros_like(values), "prev": np.array(values, copy=True)}
    slots = {"m": np.zeros_like(values), "v": np.zeros(batch, dtype=values.dtype)}
    if cfg.amsgrad:
        slots["vhat"] = np.zeros(batch, dtype=values.dtype)
    return slots


def _warn_fallbacks(cfg: OptimizerConfig, binding: ParameterBinding) -> None:
    manifold = binding.manifold
    if cfg.use_exp and not manifold.has_exp:
        logger.warning("%s: %r has no exponential map, stepping with retr", binding.name, manifold)
    needs_transport = cfg.algorithm != "rsgd" or cfg.momentum > 0
    if needs_transport and cfg.use_exact_transport and not manifold.has_ptransp:
        logger.warning(
            "%s: %r has no parallel transport, using vector transport", binding.name, manifold
        )


def init(
    config: OptimizerConfig | Mapping[str, Any], bindings: Iterable[ParameterBinding]
) -> OptimizerState:
    """
    Allocate zeroed optimizer slots for ``bindings``.

    Args:
        config: Optimizer configuration, or keyword mapping to validate
        bindings: Parameters to optimize; names must be unique

    Returns:
        OptimizerState with every step counter at 0

    Raises:
        ConfigError: On out-of-range hyperparameters
        ValueError: If a binding is off its manifold or names repeat
    """
    cfg = config if isinstance(config, OptimizerConfig) else optimizer_config(**config)
    state = OptimizerState(config=cfg)
    for binding in bindings:
        if binding.name in state.slots:
            raise ValueError(f"duplicate binding name: {binding.name!r}")
        if not binding.manifold.check_point(binding.values):
            raise ValueError(f"binding {binding.name!r} is not on {binding.manifold!r}")
        _warn_fallbacks(cfg, binding)
        state.slots[binding.name] = _new_slots(cfg, binding)
        state.steps[binding.name] = 0
    logger.debug("initialized %s for %d binding(s)", cfg.algorithm, len(state.slots))
    return state


def _check_gradient(binding: ParameterBinding, grad: np.ndarray, expected: tuple[int, ...]) -> None:
    if grad.shape != expected:
        raise ShapeError(f"gradient for {binding.name!r} has shape {grad.shape}, expected {expected}")
    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradient(f"non-finite gradient for {binding.name!r}")


def _slots_for(state: OptimizerState, binding: ParameterBinding) -> Slots:
    try:
        return state.slots[binding.name]
    except KeyError:
        raise ShapeError(f"binding {binding.name!r} was not registered with init()") from None


def _stabilize(state: OptimizerState, binding: ParameterBinding, t: int) -> None:
    k = state.config.stabilize
    if k is None or t % k:
        return
    manifold = binding.manifold
    binding.values = manifold.projx(binding.values)
    slots = state.slots[binding.name]
    for name in ("momentum", "m"):
        # CRMSProp's "m" holds squared magnitudes, not a tangent vector
        if name in slots and state.config.algorithm != "crmsprop":
            slots[name] = manifold.proju(binding.values, slots[name])
    logger.debug("%s: re-projected at step %d", binding.name, t)


def apply_dense(
    state: OptimizerState,
    binding: ParameterBinding,
    grad: np.ndarray,
    *,
    riemannian: bool = False,
) -> np.ndarray:
    """
    One optimizer step from a gradient shaped like ``binding.values``.

    Args:
        state: State returned by ``init``
        binding: Parameter to update (``values`` is replaced)
        grad: Euclidean gradient, or Riemannian when ``riemannian`` is set
        riemannian: Skip ``egrad2rgrad`` for gradients already on the tangent space

    Returns:
        The new parameter values

    Raises:
        ShapeError: If ``grad`` does not match the binding
        NonFiniteGradient: If ``grad`` contains NaN or Inf
    """
    grad = np.asarray(grad)
    _check_gradient(binding, grad, binding.values.shape)
    slots = _slots_for(state, binding)
    t = state.steps[binding.name] + 1
    kernel = KERNELS[state.config.algorithm]
    binding.values = kernel(binding.manifold, state.config, t, binding.values, grad, slots, riemannian)
    state.steps[binding.name] = t
    _stabilize(state, binding, t)
    return binding.values


def _active_rows(slots: Slots, touched: np.ndarray, n_rows: int) -> np.ndarray:
    active = np.zeros(n_rows, dtype=bool)
    active[touched] = True
    for name in _ACCUMULATORS:
        if name in slots:
            s = slots[name]
            active |= np.any(s.reshape(n_rows, -1) != 0, axis=1)
    return np.flatnonzero(active)


def apply_sparse(
    state: OptimizerState,
    binding: ParameterBinding,
    rows: Sequence[int] | np.ndarray,
    row_grads: np.ndarray,
    *,
    riemannian: bool = False,
) -> np.ndarray:
    """
    One optimizer step from gradients of selected rows only.

    The result matches ``apply_dense`` with the missing rows' gradients set to
    zero, including the decay of accumulators on untouched rows. Rows with
    no gradient and all-zero accumulators are left bitwise unchanged.

    Raises:
        IndexError: On duplicate or out-of-range row indices
        ShapeError: If ``row_grads`` does not match ``(len(rows),) + row shape``
        NonFiniteGradient: If ``row_grads`` contains NaN or Inf
    """
    n_rows = binding.rows
    if n_rows == 0:
        raise ShapeError(f"binding {binding.name!r} has no batch axis to index")
    idx = np.asarray(rows, dtype=np.intp).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= n_rows):
        raise IndexError(f"row index out of range for {n_rows} rows: {idx.tolist()}")
    if np.unique(idx).size != idx.size:
        raise IndexError(f"duplicate row indices: {idx.tolist()}")
    row_grads = np.asarray(row_grads)
    _check_gradient(binding, row_grads, (idx.size,) + binding.values.shape[1:])

    slots = _slots_for(state, binding)
    t = state.steps[binding.name] + 1
    active = _active_rows(slots, idx, n_rows)

    grad = np.zeros((active.size,) + binding.values.shape[1:], dtype=binding.values.dtype)
    grad[np.searchsorted(active, idx)] = row_grads
    sub_slots = {name: s[active] for name, s in slots.items()}
    kernel = KERNELS[state.config.algorithm]
    new_rows = kernel(
        binding.manifold, state.config, t, binding.values[active], grad, sub_slots, riemannian
    )

    values = np.array(binding.values, copy=True)
    values[active] = new_rows
    for name, s in sub_slots.items():
        slots[name][active] = s
    if "prev" in slots:
        # the dense path moves every row's previous point to its current one
        slots["prev"] = np.array(binding.values, copy=True)
    binding.values = values
    state.steps[binding.name] = t
    _stabilize(state, binding, t)
    logger.debug("%s: sparse step %d over %d active row(s)", binding.name, t, active.size)
    return binding.values
