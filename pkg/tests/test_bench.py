"""Tests for the benchmark runner and the command-line interface."""

import json
import logging

import numpy as np
import pytest

from manifold_sgd.bench import BenchmarkRunner, cli_main, low_level_demo, run
from manifold_sgd.errors import CorruptCheckpoint
from manifold_sgd.manifolds import Euclidean
from manifold_sgd.optimizers import optimizer_config
from manifold_sgd.problems import Problem, build_problem, geodesic_midpoint, pole, spd_mean
from manifold_sgd.storage import read_trace_csv
from tests.conftest import random_spd


def radam(lr: float = 0.2, **kwargs):
    return optimizer_config(algorithm="radam", learning_rate=lr, **kwargs)


def rsgd(lr: float, **kwargs):
    return optimizer_config(algorithm="rsgd", learning_rate=lr, **kwargs)


def cliff(start: float = 0.0) -> Problem:
    """Linear objective on the line that is undefined past x = -0.25."""
    return Problem(
        name="cliff",
        manifold=Euclidean((1,)),
        loss=lambda x: float(x[0]) if x[0] > -0.25 else float("nan"),
        grad=lambda x: np.ones(1),
        start=np.full(1, start),
    )


# ============================================================================
# run / BenchmarkRunner
# ============================================================================


class TestRun:
    def test_trace_records_every_step(self):
        trace = run("pole", radam(), steps=10, seed=1, run_id="pole-radam")
        assert [r.step for r in trace.rows] == list(range(11))
        assert trace.run_id == "pole-radam"
        assert trace.problem == "pole"
        assert trace.seed == 1
        assert trace.config.algorithm == "radam"
        assert trace.optimal_value == 0.0
        assert trace.has_distance
        assert not trace.aborted

    def test_deterministic(self):
        a = run("poincare_stress", radam(0.05), steps=5, seed=3)
        b = run("poincare_stress", radam(0.05), steps=5, seed=3)
        assert a == b

    def test_rejects_zero_steps(self):
        with pytest.raises(ValueError, match="steps"):
            run("pole", radam(), steps=0)

    def test_accepts_problem_instance(self):
        problem = pole(n_points=3, seed=2)
        trace = run(problem, rsgd(0.1), steps=2)
        assert trace.rows[0].loss == problem.loss(problem.start)

    def test_every_iterate_stays_on_the_circle(self):
        runner = BenchmarkRunner(build_problem("pole", seed=1), radam())
        for _ in range(10):
            runner.advance(1)
            assert np.abs(np.linalg.norm(runner.values, axis=-1) - 1.0).max() <= 1e-9
            assert runner.problem.manifold.check_point(runner.values, tol=1e-8)

    def test_non_finite_objective_aborts(self, caplog):
        # rsgd walks from 0 past the cliff at 0.1 per step
        with caplog.at_level(logging.ERROR, logger="manifold_sgd"):
            trace = run(cliff(), rsgd(0.1), steps=10)
        assert trace.aborted
        assert [r.step for r in trace.rows] == [0, 1, 2]
        assert "aborted" in caplog.text

    def test_rayleigh_iterates_stay_on_sphere(self):
        """Exponential-map steps do not drift off the sphere over a long run."""
        runner = BenchmarkRunner(build_problem("rayleigh", seed=0, n=10), rsgd(0.05))
        sphere = runner.problem.manifold
        for _ in range(300):
            runner.advance(1)
            assert sphere.check_point(runner.values, tol=1e-8)
        assert runner.trace.final_loss < runner.trace.initial_loss

    def test_non_finite_start_aborts_without_rows(self, caplog):
        """A non-finite objective at the starting point flags an empty trace."""
        with caplog.at_level(logging.ERROR, logger="manifold_sgd"):
            trace = run(cliff(start=-1.0), rsgd(0.1), steps=5)
        assert trace.aborted
        assert trace.rows == []
        assert trace.last_step == 0
        assert np.isnan(trace.final_loss)
        assert "aborted at step 0" in caplog.text

    def test_non_finite_gradient_aborts(self, caplog):
        """A NaN gradient stops the run and keeps the rows recorded so far."""
        problem = Problem(
            name="nan_grad",
            manifold=Euclidean((1,)),
            loss=lambda x: float(x[0] ** 2),
            grad=lambda x: np.array([np.nan]) if x[0] < 0.75 else 2.0 * x,
            start=np.ones(1),
        )
        with caplog.at_level(logging.ERROR, logger="manifold_sgd"):
            trace = run(problem, rsgd(0.1), steps=10)
        assert trace.aborted
        assert [r.step for r in trace.rows] == [0, 1, 2]
        assert "non-finite gradient" in caplog.text

    def test_riemannian_gradient_bypasses_conversion(self, rng):
        a = random_spd(3, rng)
        b = random_spd(3, rng, cond=20.0)
        runner = BenchmarkRunner(spd_mean(anchors=[a, b]), rsgd(0.1))
        runner.advance(200)
        np.testing.assert_allclose(runner.values, geodesic_midpoint(a, b), atol=1e-6)


class TestCheckpoint:
    def test_interrupted_run_resumes_bitwise(self):
        problem = build_problem("pole", seed=1)
        uninterrupted = BenchmarkRunner(problem, radam(amsgrad=True))
        uninterrupted.advance(50)

        first = BenchmarkRunner(problem, radam(amsgrad=True))
        first.advance(25)
        blob = first.checkpoint()

        resumed = BenchmarkRunner(problem, radam(amsgrad=True))
        resumed.restore(blob)
        assert resumed.step == 25
        assert resumed.trace.rows[0].step == 25
        resumed.advance(25)

        assert resumed.values.tobytes() == uninterrupted.values.tobytes()
        assert resumed.trace.rows == uninterrupted.trace.rows[25:]

    def test_restore_other_problem(self):
        blob = BenchmarkRunner(pole(n_points=4), radam()).checkpoint()
        runner = BenchmarkRunner(pole(n_points=8), radam())
        with pytest.raises(CorruptCheckpoint, match="pole"):
            runner.restore(blob)

    def test_restore_keeps_checkpoint_config(self, caplog):
        blob = BenchmarkRunner(pole(n_points=4), radam(0.2)).checkpoint()
        runner = BenchmarkRunner(pole(n_points=4), radam(0.5))
        with caplog.at_level(logging.WARNING, logger="manifold_sgd"):
            runner.restore(blob)
        assert runner.state.config.learning_rate == 0.2
        assert runner.trace.config.learning_rate == 0.2
        assert "checkpoint's optimizer config" in caplog.text


class TestConvergence:
    """Oracle-backed convergence checks on the catalog problems."""

    def test_pole_with_riemannian_adam(self):
        trace = run("pole", radam(0.2), steps=10, seed=1)
        assert trace.final_loss < trace.initial_loss
        assert trace.rows[-1].dist_to_opt <= 0.5 * trace.rows[0].dist_to_opt

    @pytest.mark.slow
    def test_rayleigh_reaches_smallest_eigenvalue(self):
        problem = build_problem("rayleigh", seed=0, n=10)
        expected = np.linalg.eigvalsh(_rayleigh_matrix(problem))[0]
        trace = run(problem, rsgd(0.05), steps=2000)
        assert abs(trace.final_loss - problem.optimal_value) <= 1e-8
        assert problem.optimal_value == pytest.approx(expected, abs=1e-12)

    @pytest.mark.slow
    def test_subspace_reaches_top_eigenvalues(self):
        problem = build_problem("subspace", seed=0, n=10, p=3)
        trace = run(problem, rsgd(0.05), steps=1000)
        assert abs(trace.final_loss - problem.optimal_value) <= 1e-6

    def test_spd_mean_converges_to_midpoint(self):
        problem = build_problem("spd_mean", seed=0, n=3, k=2)
        trace = run(problem, rsgd(0.1), steps=200)
        assert trace.rows[-1].dist_to_opt <= 1e-6
        assert trace.final_loss == pytest.approx(problem.optimal_value, rel=1e-9)

    def test_retraction_and_exp_agree_for_small_steps(self):
        alpha = 0.01
        exact = run("pole", radam(alpha), steps=10, seed=1)
        approx = run("pole", radam(alpha, use_exp=False), steps=10, seed=1)
        diff = abs(exact.final_loss - approx.final_loss)
        assert diff < 10 * alpha**2 * exact.rows[0].grad_norm

    def test_single_precision_tracks_double(self):
        double = run("pole", radam(), steps=10, seed=1)
        single = run("pole", radam(), steps=10, seed=1, precision="single")
        assert single.precision == "single"
        assert single.final_loss == pytest.approx(double.final_loss, rel=1e-3)


def _rayleigh_matrix(problem: Problem) -> np.ndarray:
    """Recover A from the quadratic form by polarization."""
    n = problem.params["n"]
    eye = np.eye(n)
    return np.array(
        [[(problem.grad(eye[i]) @ eye[j]) / 2 for j in range(n)] for i in range(n)]
    )


class TestDemo:
    def test_walkthrough(self):
        out = low_level_demo()
        assert list(out) == ["x", "u", "v", "y", "u_transported", "v_transported"]
        x, y = out["x"], out["y"]
        assert np.linalg.norm(x) == pytest.approx(1.0)
        assert np.linalg.norm(y) == pytest.approx(1.0)
        np.testing.assert_allclose(x, np.array([1.0, -1.0, 1.0]) / np.sqrt(3))
        assert x @ out["u"] == pytest.approx(0.0, abs=1e-15)
        assert y @ out["u_transported"] == pytest.approx(0.0, abs=1e-12)
        assert y @ out["v_transported"] == pytest.approx(0.0, abs=1e-12)


# ============================================================================
# CLI
# ============================================================================


class TestCLI:
    def run_args(self, out, *extra):
        return [
            "run", "--problem", "pole", "--optimizer", "radam", "--lr", "0.2",
            "--steps", "10", "--seed", "1", "--out", str(out), *extra,
        ]  # fmt: skip

    def test_run_writes_trace(self, tmp_path):
        out = tmp_path / "t.csv"
        assert cli_main(self.run_args(out)) == 0
        lines = out.read_bytes().split(b"\n")
        assert lines[0] == b"step,loss,grad_norm,dist_to_opt"
        assert b"\r" not in out.read_bytes()
        rows = read_trace_csv(out)
        assert [r.step for r in rows] == list(range(11))

    def test_run_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli_main(self.run_args(a)) == 0
        assert cli_main(self.run_args(b)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_seventeen_significant_digits(self, tmp_path):
        out = tmp_path / "t.csv"
        cli_main(self.run_args(out))
        trace = run("pole", radam(), steps=10, seed=1)
        assert [r.loss for r in read_trace_csv(out)] == [r.loss for r in trace.rows]

    def test_checkpoint_and_resume(self, tmp_path):
        ckpt = tmp_path / "run.ckpt"
        full = tmp_path / "full.csv"
        head = tmp_path / "head.csv"
        tail = tmp_path / "tail.csv"
        assert cli_main(self.run_args(full)) == 0
        args = self.run_args(head, "--save-checkpoint", str(ckpt))
        args[args.index("--steps") + 1] = "4"
        assert cli_main(args) == 0
        assert cli_main(self.run_args(tail, "--resume", str(ckpt))) == 0
        resumed = read_trace_csv(tail)
        assert [r.step for r in resumed] == list(range(4, 11))
        assert resumed == read_trace_csv(full)[4:]

    def test_size_parameter(self, tmp_path):
        out = tmp_path / "t.csv"
        assert cli_main(self.run_args(out, "--param", "n_points=3")) == 0

    def test_unknown_size_parameter(self, tmp_path, capsys):
        assert cli_main(self.run_args(tmp_path / "t.csv", "--param", "depth=3")) == 2
        assert "error" in capsys.readouterr().err

    def test_zero_steps(self, tmp_path):
        args = self.run_args(tmp_path / "t.csv")
        args[args.index("--steps") + 1] = "0"
        assert cli_main(args) == 2

    def test_invalid_hyperparameter(self, tmp_path):
        assert cli_main(self.run_args(tmp_path / "t.csv", "--beta2", "1.5")) == 2

    def test_non_finite_start_exits_one(self, tmp_path, monkeypatch):
        """A run whose objective is non-finite at step 0 is flagged, not a crash."""
        monkeypatch.setattr("manifold_sgd.bench.build_problem", lambda *a, **kw: cliff(start=-1.0))
        out = tmp_path / "t.csv"
        assert cli_main(self.run_args(out)) == 1
        assert out.read_bytes() == b"step,loss,grad_norm\n"

    def test_non_finite_gradient_exits_one(self, tmp_path, monkeypatch):
        """A NaN gradient mid-run aborts with status 1 rather than a usage error."""
        problem = Problem(
            name="nan_grad",
            manifold=Euclidean((1,)),
            loss=lambda x: float(x[0] ** 2),
            grad=lambda x: np.array([np.nan]),
            start=np.ones(1),
        )
        monkeypatch.setattr("manifold_sgd.bench.build_problem", lambda *a, **kw: problem)
        out = tmp_path / "t.csv"
        assert cli_main(self.run_args(out)) == 1
        assert [r.step for r in read_trace_csv(out)] == [0]

    def test_check_passes(self):
        assert cli_main(["check", "--manifold", "sphere", "--trials", "100", "--seed", "7"]) == 0

    def test_check_fails_under_impossible_tolerance(self):
        assert cli_main(["check", "--manifold", "sphere", "--trials", "10", "--tol", "1e-30"]) == 1

    def test_check_writes_json(self, tmp_path):
        path = tmp_path / "report.json"
        assert cli_main(["check", "--manifold", "poincare", "--trials", "10", "--json", str(path)]) == 0
        data = json.loads(path.read_text())
        assert data["subject"] == "poincare(2)"
        assert data["pass"] is True
        assert list(data["records"][0]) == ["property", "trials", "max_error", "tol", "pass"]

    def test_compare(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        cli_main(self.run_args(a))
        cli_main(self.run_args(b))
        capsys.readouterr()
        assert cli_main(["compare", str(a), str(b)]) == 0
        assert "Identical" in capsys.readouterr().out

    def test_compare_missing_file(self, tmp_path):
        assert cli_main(["compare", str(tmp_path / "x.csv"), str(tmp_path / "y.csv")]) == 2

    def test_problems(self, capsys):
        assert cli_main(["problems"]) == 0
        assert "spd_mean" in capsys.readouterr().out

    def test_demo(self):
        assert cli_main(["demo"]) == 0

    @pytest.mark.parametrize(
        "argv",
        [
            ["run", "--problem", "pole", "--lr", "0.1", "--out", "t.csv", "--bogus"],
            ["run", "--problem", "rosenbrock", "--lr", "0.1", "--out", "t.csv"],
            ["run", "--problem", "pole", "--out", "t.csv"],
            ["check", "--manifold", "torus"],
            ["frobnicate"],
            [],
        ],
        ids=["unknown-flag", "unknown-problem", "missing-lr", "unknown-manifold", "unknown-command", "empty"],
    )
    def test_usage_errors(self, argv, capsys):
        assert cli_main(argv) == 2
        assert capsys.readouterr().err

    def test_version(self, capsys):
        assert cli_main(["--version"]) == 0
        assert "manifold-sgd" in capsys.readouterr().out
