"""Pytest configuration and shared fixtures."""

from __future__ import annotations

from collections.abc import Iterator
from pathlib import Path

import numpy as np
import pytest
from fastmcp import FastMCP

# Import the actual MCP server instance
from manifold_sgd import server as mcp_server
from manifold_sgd.config import get_settings
from manifold_sgd.manifolds import PoincareBall, SPDAffineInvariant, Sphere
from manifold_sgd.models import OptimizerConfig, Trace, TraceRow
from manifold_sgd.storage import RunStorage

# ============================================================================
# Settings
# ============================================================================


@pytest.fixture
def fresh_settings() -> Iterator[None]:
    """Re-read settings from the environment for this test only."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


# ============================================================================
# MCP Server Fixture
# ============================================================================


@pytest.fixture
def server() -> FastMCP:
    """FastMCP server instance for testing."""
    return mcp_server.server


# ============================================================================
# Geometry Fixtures
# ============================================================================


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator; tests must not depend on global numpy state."""
    return np.random.default_rng(1234)


@pytest.fixture
def sphere() -> Sphere:
    return Sphere(3)


@pytest.fixture
def circle() -> Sphere:
    """S¹ embedded in R², the geometry of the pole problem."""
    return Sphere(2)


@pytest.fixture
def poincare() -> PoincareBall:
    return PoincareBall(2)


@pytest.fixture
def spd() -> SPDAffineInvariant:
    return SPDAffineInvariant(3)


def random_spd(n: int, rng: np.random.Generator, cond: float = 10.0) -> np.ndarray:
    """SPD matrix with eigenvalues log-spaced in [1, cond]."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    w = np.logspace(0, np.log10(cond), n)
    return (q * w) @ q.T


@pytest.fixture
def spd_factory(rng: np.random.Generator):
    """Build SPD matrices: ``spd_factory(n, cond=10.0)``."""
    return lambda n, cond=10.0: random_spd(n, rng, cond)


# ============================================================================
# Trace / Storage Fixtures
# ============================================================================


def make_trace(losses: list[float], run_id: str = "run", aborted: bool = False) -> Trace:
    """Trace with the given per-step objective values."""
    return Trace(
        run_id=run_id,
        problem="pole",
        config=OptimizerConfig(algorithm="radam", learning_rate=0.2),
        seed=1,
        rows=[TraceRow(step=i, loss=v, grad_norm=1.0 / (i + 1)) for i, v in enumerate(losses)],
        aborted=aborted,
    )


@pytest.fixture
def sample_trace() -> Trace:
    """Short decreasing trace."""
    return make_trace([4.0, 3.0, 2.5, 2.25], run_id="sample")


@pytest.fixture
def storage(tmp_path: Path) -> RunStorage:
    """Run storage in a temporary directory."""
    return RunStorage(tmp_path / "runs")
