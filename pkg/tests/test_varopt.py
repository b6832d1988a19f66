import numpy as np
import pytest

from whittaker2d import (
    MinimizeResult,
    ModelConfig,
    PathBundle,
    TimeGrid,
    TriangularConfiguration,
    VariationalProblem,
    minimize_rate,
    total_rate,
)
from whittaker2d.varopt import _objective_and_grad, _project_interlacing


def _problem(N, start, end, m=64, **kw):
    return VariationalProblem(
        N=N,
        grid=TimeGrid(0.0, 1.0, m),
        initial=TriangularConfiguration(N, np.asarray(start, dtype=float)),
        terminal=TriangularConfiguration(N, np.asarray(end, dtype=float)),
        **kw,
    )


def test_rejects_non_interlaced_endpoints():
    with pytest.raises(ValueError):
        _problem(2, [0.0, -1.0, 0.0], [0.0, 1.0, -1.0])
    with pytest.raises(ValueError):
        _problem(2, [0.0, 1.0, -1.0], [0.0, -1.0, 0.0])


def test_n1_recovers_straight_line():
    result = minimize_rate(_problem(1, [0.0], [1.0]))
    assert result.rate == pytest.approx(0.5, rel=1e-9)
    line = np.linspace(0.0, 1.0, 65)
    np.testing.assert_allclose(result.bundle.values[0], line, atol=1e-9)


def test_descent_from_perturbed_start():
    # hand the optimizer a deliberately bad interior guess by bending the
    # problem: widely separated endpoints, then check monotone improvement
    problem = _problem(2, [0.0, 1.0, -1.0], [1.0, 2.0, 0.0], m=32)
    result = minimize_rate(problem)
    assert result.rate <= result.baseline_rate + 1e-12
    # straight lines with equal slopes are already optimal here
    assert result.rate == pytest.approx(3 * 0.5, rel=1e-6)


def test_constrained_endpoints_stay_fixed_and_feasible():
    problem = _problem(2, [0.0, 0.5, -0.5], [0.5, 0.5, 0.0], m=32)
    result = minimize_rate(problem)
    np.testing.assert_allclose(
        result.bundle.at_time(0).entries, problem.initial.entries, atol=1e-12
    )
    np.testing.assert_allclose(
        result.bundle.at_time(problem.grid.steps).entries,
        problem.terminal.entries,
        atol=1e-12,
    )
    vals = result.bundle.values
    # interlacing feasibility at every slice
    assert np.all(vals[1] - vals[0] >= -1e-9)  # T_2_1 >= T_1_1
    assert np.all(vals[0] - vals[2] >= -1e-9)  # T_1_1 >= T_2_2
    assert result.rate <= result.baseline_rate + 1e-12


def test_squeezed_problem_beats_baseline_action():
    # endpoints force the middle particle through its neighbors' corridor;
    # the achieved rate must never exceed the projected-baseline rate
    problem = _problem(
        2, [0.0, 0.1, -0.1], [0.8, 0.9, 0.7], m=48, max_iters=4000
    )
    result = minimize_rate(problem)
    assert np.isfinite(result.rate)
    assert result.rate <= result.baseline_rate + 1e-12
    cfg = ModelConfig(N=2, gamma=8.0, initial=problem.initial)
    br = total_rate(result.bundle, cfg, problem.eps)
    assert br.infinity_reason == "none"


def test_projection_restores_interlacing():
    rng = np.random.default_rng(0)
    vals = rng.normal(0, 1, (3, 20))
    _project_interlacing(vals, 2)
    assert np.all(vals[1] - vals[0] >= -1e-12)
    assert np.all(vals[0] - vals[2] >= -1e-12)


def test_projection_noop_inside_cone():
    vals = np.array(
        [[0.0, 0.1], [1.0, 1.1], [-1.0, -0.9]]
    )
    before = vals.copy()
    _project_interlacing(vals, 2)
    np.testing.assert_array_equal(vals, before)


def test_objective_matches_schilder_when_interior():
    grid = TimeGrid(0.0, 1.0, 16)
    vals = np.array(
        [
            np.linspace(0.0, 1.0, 17),
            np.linspace(2.0, 3.5, 17),
            np.linspace(-2.0, -1.0, 17),
        ]
    )
    value, grad = _objective_and_grad(vals, 2, grid, 1e-6, "lemma")
    expect = 0.5 * (1.0 + 1.5**2 + 1.0)
    assert value == pytest.approx(expect, rel=1e-9)
    # interior gradient of a straight line vanishes
    assert np.max(np.abs(grad[:, 1:-1])) < 1e-9


def test_result_reports_iterations():
    result = minimize_rate(_problem(1, [0.0], [0.0], m=8))
    assert isinstance(result, MinimizeResult)
    assert result.rate == 0.0
    assert result.iterations >= 1
    assert result.converged
