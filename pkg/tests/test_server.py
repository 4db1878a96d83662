"""Tests for FastMCP server tools."""

import pytest
from dirty_equals import IsFloat, IsStr

from manifold_sgd.server import (
    check_manifold,
    compare_runs,
    list_problems,
    list_runs,
    recent_runs,
    run_benchmark,
    save_run,
)


@pytest.fixture(autouse=True)
def clear_runs():
    """Clear session runs before each test."""
    recent_runs.clear()
    yield
    recent_runs.clear()


@pytest.fixture
def runs_dir(tmp_path, monkeypatch, fresh_settings):
    """Point the runs directory at a temporary path."""
    monkeypatch.setenv("MANIFOLD_SGD_RUNS_DIR", str(tmp_path / "runs"))
    return tmp_path / "runs"


class TestListProblems:
    async def test_names(self):
        names = await list_problems()
        assert len(names) == 6
        assert "pole" in names


class TestRunBenchmark:
    """Tests for run_benchmark tool."""

    async def test_pole(self):
        result = await run_benchmark("pole", optimizer="radam", learning_rate=0.2, steps=10, seed=1)
        assert result == {
            "run_id": IsStr(regex=r"[0-9a-f]{12}"),
            "problem": "pole",
            "steps": 10,
            "initial_loss": IsFloat(gt=0),
            "final_loss": IsFloat(gt=0),
            "optimal_value": 0.0,
            "aborted": False,
        }
        assert result["final_loss"] < result["initial_loss"]
        assert result["run_id"] in recent_runs

    async def test_unknown_problem(self):
        with pytest.raises(KeyError):
            await run_benchmark("rosenbrock")

    async def test_invalid_config(self):
        with pytest.raises(ValueError):
            await run_benchmark("pole", learning_rate=-1.0)

    async def test_list_runs(self):
        a = await run_benchmark("pole", steps=2)
        b = await run_benchmark("rayleigh", steps=2)
        assert await list_runs() == [a["run_id"], b["run_id"]]


class TestCompareRuns:
    """Tests for compare_runs tool."""

    async def test_same_run(self):
        result = await run_benchmark("pole", optimizer="radam", learning_rate=0.2, steps=5)
        comparison = await compare_runs(result["run_id"], result["run_id"])
        assert comparison["steps_compared"] == 6
        assert comparison["max_abs_loss_diff"] == 0.0

    async def test_learning_rates(self):
        slow = await run_benchmark("rayleigh", learning_rate=1e-3, steps=20)
        fast = await run_benchmark("rayleigh", learning_rate=5e-2, steps=20)
        comparison = await compare_runs(slow["run_id"], fast["run_id"])
        assert comparison["improved"]
        assert comparison["summary_text"] == IsStr(regex=r"(?s).*lower objective.*")

    async def test_unknown_run(self, runs_dir):
        with pytest.raises(ValueError, match="Run not found"):
            await compare_runs("nope", "nope")

    async def test_saved_run(self, runs_dir):
        result = await run_benchmark("pole", steps=3)
        saved = await save_run(result["run_id"])
        assert saved["path"] == str(runs_dir / f"{result['run_id']}.csv")

        recent_runs.clear()
        comparison = await compare_runs(result["run_id"], result["run_id"])
        assert comparison["steps_compared"] == 4

    async def test_save_unknown_run(self):
        with pytest.raises(ValueError, match="Run not found"):
            await save_run("nope")


class TestCheckManifold:
    async def test_sphere(self):
        report = await check_manifold("sphere", trials=20, seed=7)
        assert list(report) == ["subject", "seed", "pass", "records"]
        assert report["subject"] == "sphere(3)"
        assert report["seed"] == 7
        assert report["pass"] is True

    async def test_product(self):
        report = await check_manifold("product", trials=10)
        assert report["subject"] == "sphere(3) x poincare(2) x euclidean(2)"
        assert any(r["property"] == "componentwise" for r in report["records"])


class TestServerRegistration:
    async def test_tools_registered(self, server):
        tools = await server.get_tools()
        assert set(tools) >= {
            "list_problems",
            "run_benchmark",
            "list_runs",
            "save_run",
            "compare_runs",
            "check_manifold",
        }
