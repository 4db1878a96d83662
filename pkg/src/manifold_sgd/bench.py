"""Benchmark runner and command-line interface.

Subcommands::

    manifold-sgd run --problem pole --optimizer radam --lr 0.2 --steps 10 --out trace.csv
    manifold-sgd check --manifold sphere --trials 100 --seed 7
    manifold-sgd compare before.csv after.csv
    manifold-sgd problems
    manifold-sgd demo

Exit status: 0 on success, 1 when a check fails or a run aborts, 2 on usage
errors.
"""

from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any, get_args

import numpy as np
from rich.console import Console
from rich.table import Table

from manifold_sgd import __version__
from manifold_sgd.checkpoint import load, save
from manifold_sgd.checks import run_manifold_suite
from manifold_sgd.comparator import TraceComparator
from manifold_sgd.config import Precision, get_settings
from manifold_sgd.errors import CorruptCheckpoint, NonFiniteGradient, NonFiniteObjective, UnknownProblem
from manifold_sgd.logging import configure_logging, get_logger
from manifold_sgd.manifolds import DEFAULT_SPECS, Sphere, build_manifold
from manifold_sgd.models import CheckReport, ManifoldKind, OptimizerConfig, Trace, TraceRow
from manifold_sgd.optimizers import ParameterBinding, apply_dense, init, optimizer_config
from manifold_sgd.problems import Problem, build_problem, list_problems
from manifold_sgd.storage import load_trace, write_report_json, write_trace_csv

logger = get_logger(__name__)

__all__ = [
    "BenchmarkRunner",
    "cli_main",
    "low_level_demo",
    "main",
    "run",
]


class BenchmarkRunner:
    """Drives one optimizer over one problem and records a trace.

    The runner can be checkpointed and restored mid-run; a restored runner
    continues the exact trajectory of the original.
    """

    def __init__(
        self,
        problem: Problem,
        config: OptimizerConfig,
        *,
        seed: int = 0,
        precision: Precision = "double",
        run_id: str | None = None,
    ):
        self.problem = problem
        self.dtype = get_settings().dtype(precision)
        self.binding = ParameterBinding(
            problem.name, problem.initial_point().astype(self.dtype), problem.manifold
        )
        self.state = init(config, [self.binding])
        self.trace = Trace(
            run_id=run_id,
            problem=problem.name,
            config=config,
            seed=seed,
            precision=precision,
            optimal_value=problem.optimal_value,
        )
        self._grad: np.ndarray | None = None
        self._evaluate()

    @property
    def step(self) -> int:
        return self.state.steps[self.binding.name]

    @property
    def values(self) -> np.ndarray:
        return self.binding.values

    def _record(self) -> None:
        """Evaluate the current point and append a trace row."""
        x = self.binding.values
        loss = float(self.problem.loss(x))
        if not np.isfinite(loss):
            raise NonFiniteObjective(f"objective is {loss} at step {self.step}")
        grad = np.asarray(self.problem.grad(x)).astype(self.dtype)
        dist = self.problem.distance_to_optimum
        self.trace.rows.append(
            TraceRow(
                step=self.step,
                loss=loss,
                grad_norm=self.problem.grad_norm(x, grad),
                dist_to_opt=dist(x) if dist is not None else None,
            )
        )
        self._grad = grad

    def _abort(self, error: Exception) -> None:
        logger.error("%s aborted at step %d: %s", self.problem.name, self.step, error)
        self.trace.aborted = True

    def _evaluate(self) -> bool:
        """Record the current point; a non-finite objective aborts the run instead."""
        try:
            self._record()
        except NonFiniteObjective as e:
            self._abort(e)
            return False
        return True

    def advance(self, steps: int) -> Trace:
        """
        Take ``steps`` optimizer steps, recording a row after each.

        A non-finite objective or gradient stops the run and flags the trace
        as aborted; the rows recorded so far are kept.
        """
        for _ in range(steps):
            if self.trace.aborted:
                break
            assert self._grad is not None
            try:
                apply_dense(self.state, self.binding, self._grad, riemannian=self.problem.riemannian)
            except NonFiniteGradient as e:
                self._abort(e)
                break
            if self._evaluate():
                logger.debug("step %d: loss %.6e", self.step, self.trace.final_loss)
        return self.trace

    def checkpoint(self) -> bytes:
        """Serialize optimizer state and parameter values."""
        return save(self.state, [self.binding])

    def restore(self, blob: bytes) -> None:
        """
        Continue from a checkpoint; the trace restarts at the restored step.

        Raises:
            CorruptCheckpoint: If the blob is unreadable or belongs to another problem
        """
        state, values = load(blob)
        name = self.binding.name
        if name not in values or values[name].shape != self.binding.values.shape:
            raise CorruptCheckpoint(f"checkpoint does not hold parameters for {name!r}")
        if state.config != self.state.config:
            logger.warning("resuming with the checkpoint's optimizer config, not the requested one")
        self.state = state
        self.binding.values = values[name]
        self.trace = self.trace.model_copy(update={"config": state.config, "rows": [], "aborted": False})
        self._evaluate()


def run(
    problem: Problem | str,
    config: OptimizerConfig,
    steps: int,
    seed: int = 0,
    precision: Precision = "double",
    run_id: str | None = None,
) -> Trace:
    """
    Optimize a problem and return the per-step trace (step 0 included).

    Args:
        problem: Problem instance or registered name (built with ``seed``)
        config: Optimizer configuration
        steps: Number of optimizer steps (>= 1)
        seed: Seed recorded in the trace and used to build named problems
        precision: "single" or "double"
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if isinstance(problem, str):
        problem = build_problem(problem, seed=seed)
    runner = BenchmarkRunner(problem, config, seed=seed, precision=precision, run_id=run_id)
    trace = runner.advance(steps)
    logger.info(
        "%s/%s: loss %.6e -> %.6e in %d steps",
        problem.name,
        config.algorithm,
        trace.initial_loss,
        trace.final_loss,
        trace.last_step,
    )
    return trace


def low_level_demo() -> dict[str, np.ndarray]:
    """Project, project tangents, take an exponential step and transport on S²."""
    s = Sphere(3)
    x = s.projx(np.array([0.1, -0.1, 0.1]))
    u = s.proju(x, np.array([1.0, 1.0, 1.0]))
    v = s.proju(x, np.array([-0.7, -1.4, 1.4]))
    y = s.exp(x, v)
    return {
        "x": x,
        "u": u,
        "v": v,
        "y": y,
        "u_transported": s.transp(x, y, u),
        "v_transported": s.transp(x, y, v),
    }


# ============================================================================
# CLI
# ============================================================================


def _param(text: str) -> tuple[str, int]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected KEY=INT, got {text!r}")
    try:
        return key.replace("-", "_"), int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{key}: {value!r} is not an integer") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="manifold-sgd",
        description="Riemannian optimization benchmarks and manifold checks",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"], default=None
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="optimize a benchmark problem and write its trace")
    p.add_argument("--problem", required=True, choices=list_problems())
    p.add_argument("--optimizer", choices=["rsgd", "crmsprop", "radam"], default="rsgd")
    p.add_argument("--lr", type=float, required=True)
    p.add_argument("--momentum", type=float, default=0.0)
    p.add_argument("--rho", type=float, default=0.9)
    p.add_argument("--beta1", type=float, default=0.9)
    p.add_argument("--beta2", type=float, default=0.999)
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--amsgrad", action="store_true")
    p.add_argument("--stabilize", type=int, default=None, metavar="K")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--precision", choices=list(get_args(Precision)), default="double")
    p.add_argument("--retraction", action="store_true", help="step with retr instead of exp")
    p.add_argument("--approx-transport", action="store_true", help="use vector transport")
    p.add_argument("--param", type=_param, action="append", default=[], metavar="KEY=INT",
                   help="problem size parameter, e.g. n_points=16")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--save-checkpoint", type=Path, default=None)
    p.add_argument("--resume", type=Path, default=None)

    c = sub.add_parser("check", help="run the manifold property suite")
    c.add_argument("--manifold", required=True, choices=[*get_args(ManifoldKind), "all"])
    c.add_argument("--trials", type=int, default=100)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--tol", type=float, default=None)
    c.add_argument("--json", type=Path, default=None)

    m = sub.add_parser("compare", help="compare two trace CSV files")
    m.add_argument("before", type=Path)
    m.add_argument("after", type=Path)

    sub.add_parser("problems", help="list benchmark problems")
    sub.add_parser("demo", help="run the low-level sphere walkthrough")
    return parser


def _config_from_args(args: argparse.Namespace) -> OptimizerConfig:
    return optimizer_config(
        algorithm=args.optimizer,
        learning_rate=args.lr,
        momentum=args.momentum,
        rho=args.rho,
        beta1=args.beta1,
        beta2=args.beta2,
        epsilon=args.epsilon,
        amsgrad=args.amsgrad,
        stabilize=args.stabilize,
        use_exp=not args.retraction,
        use_exact_transport=not args.approx_transport,
    )


def _cmd_run(args: argparse.Namespace, console: Console) -> int:
    if args.steps < 1:
        raise ValueError(f"--steps must be >= 1, got {args.steps}")
    config = _config_from_args(args)
    problem = build_problem(args.problem, seed=args.seed, **dict(args.param))
    run_id = f"{args.problem}-{config.algorithm}-s{args.seed}"
    runner = BenchmarkRunner(problem, config, seed=args.seed, precision=args.precision, run_id=run_id)
    if args.resume is not None:
        runner.restore(args.resume.read_bytes())
        logger.info("resumed %s at step %d", run_id, runner.step)
    trace = runner.advance(max(args.steps - runner.step, 0))
    write_trace_csv(trace, args.out)
    if args.save_checkpoint is not None:
        args.save_checkpoint.parent.mkdir(parents=True, exist_ok=True)
        args.save_checkpoint.write_bytes(runner.checkpoint())

    table = Table(title=f"{problem.name} / {config.algorithm}", show_header=True, header_style="bold cyan")
    for col in ("steps", "initial loss", "final loss", "grad norm", "status"):
        table.add_column(col)
    table.add_row(
        str(trace.last_step),
        f"{trace.initial_loss:.6e}",
        f"{trace.final_loss:.6e}",
        f"{trace.rows[-1].grad_norm:.3e}" if trace.rows else "-",
        "[red]aborted[/red]" if trace.aborted else "[green]ok[/green]",
    )
    console.print(table)
    return 1 if trace.aborted else 0


def _report_table(reports: Sequence[CheckReport]) -> Table:
    table = Table(show_header=True, header_style="bold cyan")
    for col in ("manifold", "property", "trials", "max error", "tol", "result"):
        table.add_column(col)
    for report in reports:
        for r in report.records:
            verdict = "skip" if r.skipped else ("[green]pass[/green]" if r.passed else "[red]FAIL[/red]")
            table.add_row(report.subject, r.property, str(r.trials), f"{r.max_error:.2e}", f"{r.tol:.0e}", verdict)
    return table


def _cmd_check(args: argparse.Namespace, console: Console) -> int:
    kinds = list(DEFAULT_SPECS) if args.manifold == "all" else [args.manifold]
    reports = [
        run_manifold_suite(build_manifold(DEFAULT_SPECS[k]), trials=args.trials, seed=args.seed, tol=args.tol)
        for k in kinds
    ]
    console.print(_report_table(reports))
    if args.json is not None:
        write_report_json(reports[0] if len(reports) == 1 else reports, args.json)
    return 0 if all(r.passed for r in reports) else 1


def _cmd_compare(args: argparse.Namespace, console: Console) -> int:
    result = TraceComparator().compare(load_trace(args.before), load_trace(args.after))
    console.print(result.summary_text)
    return 0


def _cmd_problems(args: argparse.Namespace, console: Console) -> int:
    for name in list_problems():
        console.print(name)
    return 0


def _cmd_demo(args: argparse.Namespace, console: Console) -> int:
    table = Table(title="S² walkthrough", show_header=True, header_style="bold cyan")
    table.add_column("quantity")
    table.add_column("value")
    for key, value in low_level_demo().items():
        table.add_row(key, np.array2string(value, precision=6))
    console.print(table)
    return 0


COMMANDS: dict[str, Any] = {
    "run": _cmd_run,
    "check": _cmd_check,
    "compare": _cmd_compare,
    "problems": _cmd_problems,
    "demo": _cmd_demo,
}


def cli_main(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv`` and dispatch; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    if args.log_level is not None:
        configure_logging(args.log_level)
    console = Console()
    errors = Console(stderr=True)
    try:
        return COMMANDS[args.command](args, console)
    # TypeError: a --param key the chosen problem does not take
    except (ValueError, TypeError, UnknownProblem, OSError) as e:
        errors.print(f"[red]error:[/red] {e}")
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
