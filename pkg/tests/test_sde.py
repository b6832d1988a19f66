import numpy as np
import pytest

from whittaker2d import (
    DomainError,
    IntegratorSpec,
    ModelConfig,
    NoiseBundle,
    SamplePath,
    Seed,
    TimeGrid,
    TriangularConfiguration,
    TruncationLevels,
    default_drift_cap,
    equivalence_gap,
    escape_probability_bound,
    four_particle_scan,
    sample_noise,
    simulate,
    simulate_lower_barrier_euler,
    simulate_tilde0,
    simulate_truncated,
    simulate_two_barrier,
    solve_edge_exact,
    tri_offset,
)
from whittaker2d.noise import ensemble_increments


def _config(N, gamma, entries=None, **kw):
    init = (
        TriangularConfiguration.zeros(N)
        if entries is None
        else TriangularConfiguration(N, np.asarray(entries, dtype=float))
    )
    return ModelConfig(N=N, gamma=gamma, initial=init, **kw)


def test_n1_is_exact_random_walk():
    # a single particle has no neighbors: the step is pure noise
    grid = TimeGrid(0.0, 1.0, 500)
    gamma = 8.0
    noise = sample_noise(Seed(1), grid, 1)
    res = simulate(_config(1, gamma), grid, noise)
    expect = np.concatenate(
        ([0.0], np.cumsum(noise.increments[0] / np.sqrt(gamma)))
    )
    np.testing.assert_allclose(res.bundle.values[0], expect, atol=1e-14)
    assert res.clamp_events == 0


def test_level_drift_shifts_n1():
    grid = TimeGrid(0.0, 1.0, 100)
    gamma = 4.0
    noise = sample_noise(Seed(2), grid, 1)
    cfg = _config(1, gamma, drifts=np.array([0.7]))
    res = simulate(cfg, grid, noise)
    free = simulate(_config(1, gamma), grid, noise)
    np.testing.assert_allclose(
        res.bundle.values[0] - free.bundle.values[0],
        0.7 * grid.times,
        atol=1e-10,
    )


def test_edge_ode_oracle_log1p():
    # zero noise, barrier glued at the start value: the edge particle obeys
    # y' = exp(gamma(0 - y)), y(0)=0, i.e. y = log(1 + gamma t)/gamma
    gamma = 4.0
    grid = TimeGrid(0.0, 1.0, 20000)
    noise = NoiseBundle.zero(grid, 3)
    res = simulate(_config(2, gamma), grid, noise)
    t = grid.times
    expect = np.log1p(gamma * t) / gamma
    got = res.bundle.values[tri_offset(2, 1)]
    assert np.max(np.abs(got - expect)) < 5e-4  # O(dt) Euler error


def test_mirror_symmetry():
    # negating noise and reversing each level maps the system onto itself
    grid = TimeGrid(0.0, 1.0, 400)
    gamma = 8.0
    noise = sample_noise(Seed(3), grid, 2)
    res = simulate(_config(2, gamma), grid, noise)
    # mirrored stream order: (1,1)->(1,1), (2,1)<->(2,2)
    perm = [0, 2, 1]
    mirrored = NoiseBundle(grid, -noise.increments[perm])
    res_m = simulate(_config(2, gamma), grid, mirrored)
    np.testing.assert_allclose(
        res_m.bundle.values[perm], -res.bundle.values, atol=1e-12
    )


def test_truncation_inactive_is_bitwise_identical():
    grid = TimeGrid(0.0, 1.0, 200)
    noise = sample_noise(Seed(4), grid, 2)
    cfg = _config(2, 8.0)
    plain = simulate(cfg, grid, noise)
    trunc = simulate_truncated(cfg, grid, noise, TruncationLevels.uniform(2, 1e6))
    np.testing.assert_array_equal(
        plain.bundle.values, trunc.bundle.values
    )
    assert plain.clamp_events == trunc.clamp_events


def test_truncation_saturated_freezes_drift():
    # L_k = 0 clips every drift exponent to 0: interior drift 0, edge drift 1
    gamma = 2.0
    grid = TimeGrid(0.0, 1.0, 100)
    noise = NoiseBundle.zero(grid, 3)
    res = simulate_truncated(
        _config(2, gamma), grid, noise, TruncationLevels.uniform(2, 0.0)
    )
    t = grid.times
    np.testing.assert_allclose(res.bundle.values[tri_offset(1, 1)], 0.0)
    np.testing.assert_allclose(
        res.bundle.values[tri_offset(2, 1)], t, atol=1e-12
    )
    np.testing.assert_allclose(
        res.bundle.values[tri_offset(2, 2)], -t, atol=1e-12
    )


def test_truncation_levels_validation():
    with pytest.raises(ValueError):
        TruncationLevels(np.array([2.0, 1.0]))
    with pytest.raises(ValueError):
        TruncationLevels(np.array([-1.0]))


def test_integrator_spec_validation():
    with pytest.raises(ValueError):
        IntegratorSpec(scheme="milstein")
    with pytest.raises(ValueError):
        IntegratorSpec(drift_cap=-1.0)
    assert default_drift_cap(8.0) == pytest.approx(np.exp(2.0))
    cfg = _config(1, 8.0)
    assert IntegratorSpec().cap(cfg) == pytest.approx(np.exp(2.0))
    assert IntegratorSpec(drift_cap=5.0).cap(cfg) == 5.0


def test_clamp_events_counted():
    # at a fully glued start the edge pushes are exactly 1, above a 0.5 cap
    grid = TimeGrid(0.0, 0.01, 10)
    cfg = _config(2, 8.0)
    noise = NoiseBundle.zero(grid, 3)
    res = simulate(cfg, grid, noise, IntegratorSpec(drift_cap=0.5))
    assert res.clamp_events > 0


def test_tilde0_far_barrier_is_nearly_free():
    gamma = 4.0
    grid = TimeGrid(0.0, 1.0, 1000)
    noise = sample_noise(Seed(6), grid, 1)
    x = np.concatenate(([0.0], np.cumsum(noise.increments[0]))) / np.sqrt(gamma)
    barrier = SamplePath.constant(grid, -10.0)
    out = simulate_tilde0(barrier, x, 0.0, gamma)
    # drift bounded by exp(-gamma * clearance) whenever the path stays above
    # the barrier neighborhood; with W/sqrt(gamma) excursions ~1 the bound
    # exp(-4 * 8) over unit time is generous
    assert np.max(np.abs(out.values - x)) < (grid.b - grid.a) * np.exp(-32.0)


def test_tilde0_glued_barrier_analytic():
    gamma = 16.0
    grid = TimeGrid(0.0, 1.0, 4000)
    barrier = SamplePath.constant(grid, 0.5)
    out = simulate_tilde0(barrier, np.zeros(grid.npoints), 0.5, gamma)
    expect = 0.5 + np.log1p(gamma * grid.times) / gamma
    assert np.max(np.abs(out.values - expect)) < 1e-6


def test_tilde0_is_edge_exact_specialization():
    gamma = 8.0
    grid = TimeGrid(0.0, 0.5, 300)
    noise = sample_noise(Seed(7), grid, 1)
    x = np.concatenate(([0.0], np.cumsum(noise.increments[0])))
    barrier = SamplePath.from_function(grid, lambda t: np.sin(3 * t) - 0.2)
    a = simulate_tilde0(barrier, x, 0.1, gamma)
    b = solve_edge_exact(barrier, x, 0.1, gamma)
    np.testing.assert_array_equal(a.values, b.values)


def test_edge_exact_honors_start_and_grid_checks():
    grid = TimeGrid(0.0, 1.0, 50)
    barrier = SamplePath.constant(grid, 0.0)
    out = solve_edge_exact(barrier, np.zeros(grid.npoints), 0.3, 2.0)
    assert out.values[0] == pytest.approx(0.3)
    with pytest.raises(ValueError):
        solve_edge_exact(barrier, np.zeros(7), 0.0, 2.0)


def test_edge_exact_dominates_free_path():
    # the barrier only ever pushes up
    gamma = 8.0
    grid = TimeGrid(0.0, 1.0, 500)
    noise = sample_noise(Seed(8), grid, 1)
    x = np.concatenate(([0.0], np.cumsum(noise.increments[0]))) / np.sqrt(gamma)
    barrier = SamplePath.constant(grid, 0.0)
    out = solve_edge_exact(barrier, x, 0.0, gamma)
    assert np.all(out.values >= x - 1e-12)


def test_lower_barrier_euler_matches_exact():
    gamma = 8.0
    grid = TimeGrid(0.0, 1.0, 5000)
    inc = ensemble_increments(9, range(4), grid, 1)[:, 0, :]
    barrier = SamplePath.constant(grid, 0.0)
    euler = simulate_lower_barrier_euler(barrier, inc, 0.1, gamma)
    for r in range(4):
        x = np.concatenate(([0.0], np.cumsum(inc[r]))) / np.sqrt(gamma)
        exact = solve_edge_exact(barrier, x, 0.1, gamma)
        assert np.max(np.abs(euler[r] - exact.values)) < 2e-3


def test_two_barrier_reduces_to_one_when_upper_is_far():
    gamma = 8.0
    grid = TimeGrid(0.0, 1.0, 1000)
    inc = ensemble_increments(10, range(3), grid, 1)[:, 0, :]
    lo = SamplePath.constant(grid, -0.2)
    hi = SamplePath.constant(grid, 50.0)
    both = simulate_two_barrier(lo, hi, inc, 0.0, gamma)
    one = simulate_lower_barrier_euler(lo, inc, 0.0, gamma)
    np.testing.assert_array_equal(both, one)


def test_four_particle_scan_shapes_and_symmetry():
    gamma = 16.0
    grid = TimeGrid(0.0, 1.0, 500)
    inc = ensemble_increments(11, range(6), grid, 4)
    states = []

    def observe(i, vals):
        states.append(vals.copy())

    clamps = four_particle_scan(gamma, grid, inc, observe=observe)
    assert clamps.shape == (6,)
    assert len(states) == grid.npoints
    path = np.stack(states, axis=-1)  # (R, 4, M+1)
    # T0 is free: exact cumulative sum of its own stream
    expect = np.concatenate(
        (np.zeros((6, 1)), np.cumsum(inc[:, 0, :] / np.sqrt(gamma), axis=1)),
        axis=1,
    )
    np.testing.assert_allclose(path[:, 0, :], expect, atol=1e-12)
    # T sits between the pushed particles most of the time; sanity: finite
    assert np.all(np.isfinite(path))
    with pytest.raises(ValueError):
        four_particle_scan(gamma, grid, inc[:, :3, :])


def test_equivalence_gap_budget_value():
    grid = TimeGrid(0.0, 1.0, 10)
    a = SamplePath.constant(grid, 0.0)
    b = SamplePath.constant(grid, 1e-5)
    rep = equivalence_gap(a, b, 32.0, 0.5)
    assert rep.budget == pytest.approx(np.exp(-8.0), rel=1e-12)
    assert rep.budget == pytest.approx(3.3546e-4, rel=1e-4)
    assert rep.gap == pytest.approx(1e-5)
    assert rep.within_budget


def test_escape_bound_arithmetic():
    # C=1 maximizes 2 t e^{C-t} at t=1
    assert escape_probability_bound(0.0, 1.0, 100.0, 1.0) == pytest.approx(
        4.5 / (10000.0 - 3.0), rel=1e-12
    )
    b = escape_probability_bound(0.0, 0.0, 10.0, 1.0)
    c1 = 1.0 + 2.0 * np.exp(-1.0)
    assert b == pytest.approx(0.5 * c1**2 / (100.0 - c1), rel=1e-12)
    assert b == pytest.approx(0.01533, abs=5e-6)
    with pytest.raises(DomainError):
        escape_probability_bound(0.0, 1.0, 1.0, 1.0)


def test_scan_rejects_mismatched_shapes():
    from whittaker2d import ensemble_scan

    grid = TimeGrid(0.0, 1.0, 10)
    cfg = _config(2, 8.0)
    with pytest.raises(ValueError):
        ensemble_scan(cfg, grid, np.zeros((2, 3, 9)))
    with pytest.raises(ValueError):
        ensemble_scan(
            cfg, grid, np.zeros((2, 3, 10)), IntegratorSpec(scheme="exact-edge")
        )
