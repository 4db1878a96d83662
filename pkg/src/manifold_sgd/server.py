"""Manifold SGD MCP Server.

FastMCP tools for running benchmark problems, comparing their traces and
checking manifold implementations.
"""

import asyncio
import uuid
from typing import Any

from fastmcp import FastMCP

from manifold_sgd.logging import get_logger

from .bench import run
from .checks import run_manifold_suite
from .comparator import TraceComparator
from .config import Precision
from .manifolds import DEFAULT_SPECS, build_manifold
from .models import ManifoldKind, Trace
from .optimizers import optimizer_config
from .problems import build_problem, list_problems as _problem_names
from .storage import RunStorage

# Create the MCP server
server = FastMCP("Manifold SGD")

comparator = TraceComparator()

# Traces of this session, keyed by run id
recent_runs: dict[str, Trace] = {}

logger = get_logger(__name__)


async def list_problems() -> list[str]:
    """List benchmark problem names.

    Returns: [name, ...]
    """
    return _problem_names()


server.tool(list_problems)


async def run_benchmark(
    problem: str,
    optimizer: str = "rsgd",
    learning_rate: float = 1e-3,
    steps: int = 100,
    seed: int = 0,
    precision: Precision = "double",
    momentum: float = 0.0,
    amsgrad: bool = False,
    use_exp: bool = True,
    use_exact_transport: bool = True,
) -> dict[str, Any]:
    """Optimize a benchmark problem and keep its trace for comparison.

    Args:
        problem: Problem name (see list_problems)
        optimizer: rsgd, crmsprop or radam
        learning_rate: Step size
        steps: Number of optimizer steps
        seed: Seed for the problem instance
        precision: single or double
        momentum: RSGD momentum
        amsgrad: Use the AMSGrad variant of radam
        use_exp: Step with exp where available, else retraction
        use_exact_transport: Use parallel transport where available

    Returns: {run_id, problem, steps, initial_loss, final_loss, optimal_value, aborted}
    """
    config = optimizer_config(
        algorithm=optimizer,
        learning_rate=learning_rate,
        momentum=momentum,
        amsgrad=amsgrad,
        use_exp=use_exp,
        use_exact_transport=use_exact_transport,
    )
    instance = build_problem(problem, seed=seed)
    run_id = uuid.uuid4().hex[:12]
    trace = await asyncio.to_thread(
        run, instance, config, steps, seed=seed, precision=precision, run_id=run_id
    )
    recent_runs[run_id] = trace
    logger.info("stored run %s (%s)", run_id, problem)
    return {
        "run_id": run_id,
        "problem": trace.problem,
        "steps": trace.last_step,
        "initial_loss": trace.initial_loss,
        "final_loss": trace.final_loss,
        "optimal_value": trace.optimal_value,
        "aborted": trace.aborted,
    }


server.tool(run_benchmark)


async def list_runs() -> list[str]:
    """List all runs captured in this session.

    Returns: [run_id, ...]
    """
    return list(recent_runs.keys())


server.tool(list_runs)


async def save_run(run_id: str) -> dict[str, Any]:
    """Persist a session run (trace CSV + metadata) to the runs directory.

    Args:
        run_id: Run ID from run_benchmark

    Returns: {run_id, path}
    """
    if run_id not in recent_runs:
        raise ValueError(f"Run not found: {run_id}")
    path = RunStorage().save(recent_runs[run_id])
    return {"run_id": run_id, "path": str(path)}


server.tool(save_run)


def _lookup(run_id: str) -> Trace:
    """Session run, else a run saved in the runs directory."""
    if run_id in recent_runs:
        return recent_runs[run_id]
    try:
        return RunStorage().load(run_id)
    except FileNotFoundError:
        raise ValueError(f"Run not found: {run_id}") from None


async def compare_runs(before_id: str, after_id: str) -> dict[str, Any]:
    """Compare two runs over their common steps.

    Runs saved by earlier sessions can be compared by ID as well.

    Args:
        before_id: Reference run ID
        after_id: Run ID to compare

    Returns: {steps_compared, final_loss_before, final_loss_after, max_abs_loss_diff, improved, summary_text, ...}
    """
    comparison = comparator.compare(_lookup(before_id), _lookup(after_id))
    return comparison.model_dump()


server.tool(compare_runs)


async def check_manifold(kind: ManifoldKind, trials: int = 100, seed: int = 0) -> dict[str, Any]:
    """Run the property suite on a manifold at its default size.

    Args:
        kind: Manifold kind, e.g. sphere, poincare, spd_affine, product
        trials: Number of random trials
        seed: Sampling seed

    Returns: {subject, seed, pass, records: [{property, trials, max_error, tol, pass}, ...]}
    """
    manifold = build_manifold(DEFAULT_SPECS[kind])
    report = await asyncio.to_thread(run_manifold_suite, manifold, trials, seed)
    return report.to_json_dict()


server.tool(check_manifold)


def main() -> None:
    """Entry point for running the server."""
    server.run()


if __name__ == "__main__":
    main()
