"""End-to-end guarantees: suite coverage, reference recursions, benchmark
convergence, gradient checks, sparse updates and resumable checkpoints.
"""

import time

import numpy as np
import pytest

from manifold_sgd.bench import BenchmarkRunner, run
from manifold_sgd.checkpoint import load, save
from manifold_sgd.checks import TOLERANCES, check_gradient, run_manifold_suite
from manifold_sgd.manifolds import DEFAULT_SPECS, Sphere
from manifold_sgd.optimizers import ParameterBinding, apply_dense, apply_sparse, init, optimizer_config
from manifold_sgd.problems import build_problem, geodesic_midpoint, spd_mean
from tests.conftest import random_spd

pytestmark = pytest.mark.integration


@pytest.mark.slow
@pytest.mark.timeout(120)
def test_property_suite_covers_the_catalog():
    start = time.perf_counter()
    reports = [run_manifold_suite(spec, trials=100, seed=0) for spec in DEFAULT_SPECS.values()]
    elapsed = time.perf_counter() - start

    assert len(reports) == 12
    for report in reports:
        failed = {r.property: r.max_error for r in report.records if not r.passed}
        assert failed == {}, report.subject
    assert TOLERANCES["exp_log_inverse"] <= 1e-6
    assert TOLERANCES["ptransp_isometry"] <= 1e-8
    assert TOLERANCES["exp_membership"] <= 1e-9
    assert TOLERANCES["zero_laws"] <= 1e-12
    assert elapsed <= 60.0


class TestFlatSpaceRecursions:
    """50 steps on four scalar parameters against independently coded updates."""

    A = np.array([2.0, 0.5, 1.0, 4.0])

    def trajectory(self, algorithm, **kwargs):
        config = optimizer_config(algorithm=algorithm, learning_rate=0.05, **kwargs)
        binding = ParameterBinding("w", np.ones(4))
        state = init(config, [binding])
        out = []
        for _ in range(50):
            out.append(apply_dense(state, binding, self.A * binding.values).copy())
        return np.array(out)

    def test_sgd(self):
        x, out = np.ones(4), []
        for _ in range(50):
            x = x - 0.05 * self.A * x
            out.append(x)
        np.testing.assert_allclose(self.trajectory("rsgd"), out, rtol=0, atol=1e-12)

    def test_rmsprop(self):
        x, m, out = np.ones(4), np.zeros(4), []
        for _ in range(50):
            g = self.A * x
            m = 0.9 * m + 0.1 * g**2
            x = x - 0.05 * g / (np.sqrt(m) + 1e-8)
            out.append(x)
        np.testing.assert_allclose(self.trajectory("crmsprop"), out, rtol=0, atol=1e-12)

    def test_adam(self):
        x, m, v, out = np.ones(4), np.zeros(4), np.zeros(4), []
        for t in range(1, 51):
            g = self.A * x
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g**2
            x = x - 0.05 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
            out.append(x)
        np.testing.assert_allclose(self.trajectory("radam"), out, rtol=0, atol=1e-12)


class TestBenchmarks:
    def test_pole_reproduction(self):
        config = optimizer_config(algorithm="radam", learning_rate=0.2)
        runner = BenchmarkRunner(build_problem("pole", seed=1, n_points=16), config)
        for _ in range(10):
            runner.advance(1)
            np.testing.assert_allclose(np.linalg.norm(runner.values, axis=-1), 1.0, rtol=0, atol=1e-9)
        trace = runner.trace
        assert trace.final_loss < trace.initial_loss
        assert trace.rows[-1].dist_to_opt <= 0.5 * trace.rows[0].dist_to_opt

    @pytest.mark.slow
    def test_rayleigh(self):
        problem = build_problem("rayleigh", seed=0, n=10)
        trace = run(problem, optimizer_config(algorithm="rsgd", learning_rate=0.05), steps=2000)
        assert abs(trace.final_loss - problem.optimal_value) <= 1e-8

    @pytest.mark.slow
    def test_subspace(self):
        problem = build_problem("subspace", seed=0, n=10, p=3)
        trace = run(problem, optimizer_config(algorithm="rsgd", learning_rate=0.05), steps=2000)
        assert abs(trace.final_loss - problem.optimal_value) <= 1e-6

    def test_spd_midpoint(self):
        rng = np.random.default_rng(21)
        a, b = random_spd(3, rng), random_spd(3, rng, cond=30.0)
        runner = BenchmarkRunner(spd_mean(anchors=[a, b]), optimizer_config(algorithm="rsgd", learning_rate=0.1))
        runner.advance(300)
        assert np.linalg.norm(runner.values - geodesic_midpoint(a, b)) <= 1e-6


class TestGradientChecks:
    @pytest.mark.parametrize("name", ["pole", "rayleigh", "subspace", "procrustes_so3", "spd_mean"])
    def test_analytic_gradients(self, name):
        assert check_gradient(build_problem(name, seed=0), h=1e-6, tol=1e-5).passed

    def test_five_percent_scaling_is_detected(self):
        problem = build_problem("procrustes_so3", seed=0)
        exact = problem.grad
        problem.grad = lambda x: 1.05 * exact(x)
        assert not check_gradient(problem, h=1e-6, tol=1e-5).passed


@pytest.mark.parametrize("algorithm", ["rsgd", "crmsprop", "radam"])
def test_sparse_matches_dense_on_embedding_table(algorithm):
    sphere = Sphere(3)
    table = sphere.random((32,), seed=0)
    config = optimizer_config(algorithm=algorithm, learning_rate=0.05)
    dense = ParameterBinding("emb", table.copy(), sphere)
    sparse = ParameterBinding("emb", table.copy(), sphere)
    dense_state, sparse_state = init(config, [dense]), init(config, [sparse])

    rng = np.random.default_rng(0)
    for _ in range(20):
        rows = np.sort(rng.choice(32, size=int(rng.integers(0, 6)), replace=False))
        row_grads = rng.standard_normal((rows.size, 3))
        full = np.zeros((32, 3))
        full[rows] = row_grads
        apply_dense(dense_state, dense, full)
        apply_sparse(sparse_state, sparse, rows, row_grads)
        np.testing.assert_allclose(sparse.values, dense.values, rtol=0, atol=1e-12)


def test_checkpoint_resume_is_bitwise():
    sphere = Sphere(3)
    rng = np.random.default_rng(8)
    grads = [rng.standard_normal((10, 3)) for _ in range(50)]
    config = optimizer_config(algorithm="radam", learning_rate=0.05, amsgrad=True)

    def fresh():
        binding = ParameterBinding("x", sphere.random((10,), seed=3), sphere)
        return init(config, [binding]), binding

    state, binding = fresh()
    for g in grads:
        apply_dense(state, binding, g)

    first_state, first = fresh()
    for g in grads[:25]:
        apply_dense(first_state, first, g)
    blob = save(first_state, [first])
    restored, values = load(blob)
    assert save(restored, [ParameterBinding("x", values["x"], sphere)]) == blob

    resumed = ParameterBinding("x", values["x"], sphere)
    for g in grads[25:]:
        apply_dense(restored, resumed, g)
    assert resumed.values.tobytes() == binding.values.tobytes()
