"""Time steppers and closed-form solvers for the scaled particle system.

The drift of particle (n, k) is

    a_n + exp(gamma * (T[n-1,k] - T[n,k])) - exp(gamma * (T[n,k] - T[n-1,k-1]))

with either exponential absent when its barrier index leaves the triangle.
Interactions are one-directional (level n reads only level n-1), so the
system is triangular and explicit stepping matches the model structure.

The exponential drift is stiff; the Euler stepper tames it by clamping the
net drift to +-D with D = exp(0.25 * gamma) by default, and reports every
clamping event so experiments can detect contamination.  Closed-form edge
solutions integrate exp(gamma * h) by trapezoid in log space, which stays
finite at any gamma.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._logquad import log_cumtrapz_exp
from .model import (
    ModelConfig,
    PathBundle,
    SamplePath,
    TimeGrid,
    tri_indices,
    tri_offset,
    tri_size,
)
from .noise import NoiseBundle

__all__ = [
    "IntegratorSpec",
    "TruncationLevels",
    "SimulationResult",
    "NonFiniteError",
    "DomainError",
    "simulate",
    "ensemble_scan",
    "four_particle_scan",
    "simulate_truncated",
    "solve_edge_exact",
    "simulate_tilde0",
    "simulate_lower_barrier_euler",
    "simulate_two_barrier",
    "equivalence_gap",
    "GapReport",
    "escape_probability_bound",
    "default_drift_cap",
]

_EXP_MAX = 700.0  # exp argument ceiling, just under float64 overflow


class NonFiniteError(RuntimeError):
    """A state value overflowed despite taming."""

    def __init__(self, step: int, particle: int):
        self.step = step
        self.particle = particle
        super().__init__(
            f"non-finite state at step {step}, particle offset {particle}"
        )


class DomainError(ValueError):
    """Inputs outside the domain where a formula is meaningful."""


def default_drift_cap(gamma: float, g_cap: float = 0.25) -> float:
    """Taming cap D = exp(g_cap * gamma).

    Under the almost-interlaced events the drift exponents stay of order
    sqrt(gamma), so the cap only activates on excursions that are already
    super-exponentially rare; clamp counts make any contamination visible.
    """
    return float(np.exp(min(gamma * g_cap, _EXP_MAX)))


@dataclass(frozen=True)
class IntegratorSpec:
    """Stepping choices.  drift_cap None means the default exp(0.25*gamma)."""

    scheme: str = "tamed-euler"
    drift_cap: float | None = None
    g_cap: float = 0.25

    def __post_init__(self):
        if self.scheme not in ("tamed-euler", "exact-edge", "reflected"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.drift_cap is not None and self.drift_cap <= 0:
            raise ValueError("drift_cap must be positive")

    def cap(self, config: ModelConfig) -> float:
        if self.drift_cap is not None:
            return self.drift_cap
        if config.drift_cap is not None:
            return config.drift_cap
        return default_drift_cap(config.gamma, self.g_cap)


@dataclass(frozen=True)
class TruncationLevels:
    """Per-level cutoffs L_1 <= L_2 <= ... <= L_N for the truncated system."""

    levels: np.ndarray

    def __post_init__(self):
        lv = np.array(self.levels, dtype=float)
        if lv.ndim != 1 or lv.size == 0:
            raise ValueError("levels must be a nonempty 1d array")
        if np.any(lv < 0):
            raise ValueError("levels must be nonnegative")
        if np.any(np.diff(lv) < 0):
            raise ValueError("levels must be nondecreasing")
        lv.flags.writeable = False
        object.__setattr__(self, "levels", lv)

    @staticmethod
    def uniform(N: int, L: float) -> "TruncationLevels":
        return TruncationLevels(np.full(N, float(L)))


@dataclass(frozen=True)
class SimulationResult:
    bundle: PathBundle
    clamp_events: int


# ---------------------------------------------------------------------------
# vectorized triangle stepping


def _neighbor_tables(N: int):
    """Index arrays describing each particle's barriers and level.

    Returns (up_src, has_up, down_src, has_down, level) where up_src[p] is
    the flat offset of the lower barrier (n-1, k) pushing particle p up, and
    down_src[p] is the upper barrier (n-1, k-1) pushing it down.
    """
    P = tri_size(N)
    up_src = np.zeros(P, dtype=int)
    down_src = np.zeros(P, dtype=int)
    has_up = np.zeros(P, dtype=bool)
    has_down = np.zeros(P, dtype=bool)
    level = np.zeros(P, dtype=int)
    for idx in tri_indices(N):
        p = tri_offset(idx.n, idx.k)
        level[p] = idx.n
        lo = idx.lower_barrier
        if lo is not None:
            up_src[p] = tri_offset(lo.n, lo.k)
            has_up[p] = True
        hi = idx.upper_barrier
        if hi is not None:
            down_src[p] = tri_offset(hi.n, hi.k)
            has_down[p] = True
    return up_src, has_up, down_src, has_down, level


def _triangle_drift(vals, gamma, tables, drifts, levels_cap):
    """Clamp-free drift for state array vals of shape (..., P)."""
    up_src, has_up, down_src, has_down, level = tables
    if levels_cap is None:
        v = vals
    else:
        caps = levels_cap[level - 1]
        v = np.clip(vals, -caps, caps)
    ex_up = gamma * (v[..., up_src] - v)
    ex_dn = gamma * (v - v[..., down_src])
    push_up = np.where(has_up, np.exp(np.minimum(ex_up, _EXP_MAX)), 0.0)
    push_dn = np.where(has_down, np.exp(np.minimum(ex_dn, _EXP_MAX)), 0.0)
    return drifts[level - 1] + push_up - push_dn


def ensemble_scan(
    config: ModelConfig,
    grid: TimeGrid,
    increments: np.ndarray,
    spec: IntegratorSpec | None = None,
    truncation: TruncationLevels | None = None,
    observe=None,
):
    """Step an ensemble of replicates and stream the states to an observer.

    increments has shape (R, P, M).  observe(i, vals) is called with the
    state array (R, P) at every grid index i, including i = 0.  Returns the
    per-replicate clamp-event counts, shape (R,).
    """
    spec = spec or IntegratorSpec()
    if spec.scheme != "tamed-euler":
        raise ValueError(f"scheme {spec.scheme!r} is not a triangle stepper")
    R, P, M = increments.shape
    if P != tri_size(config.N) or M != grid.steps:
        raise ValueError("increments shape does not match config/grid")
    tables = _neighbor_tables(config.N)
    cap = spec.cap(config)
    gamma = config.gamma
    dt = grid.dt
    sqg = np.sqrt(gamma)
    levels_cap = None if truncation is None else truncation.levels
    if levels_cap is not None and levels_cap.shape != (config.N,):
        raise ValueError("truncation levels must have one entry per level")

    vals = np.tile(config.initial.entries, (R, 1))
    clamps = np.zeros(R, dtype=int)
    if observe is not None:
        observe(0, vals)
    for i in range(M):
        drift = _triangle_drift(vals, gamma, tables, config.drifts, levels_cap)
        tamed = np.clip(drift, -cap, cap)
        clamps += np.count_nonzero(tamed != drift, axis=-1)
        vals = vals + increments[:, :, i] / sqg + tamed * dt
        if not np.all(np.isfinite(vals)):
            bad = np.argwhere(~np.isfinite(vals))[0]
            raise NonFiniteError(step=i + 1, particle=int(bad[-1]))
        if observe is not None:
            observe(i + 1, vals)
    return clamps


def _run_single(config, grid, noise, spec, truncation):
    inc = noise.increments[None, :, :]
    out = np.empty((tri_size(config.N), grid.npoints))

    def keep(i, vals):
        out[:, i] = vals[0]

    clamps = ensemble_scan(config, grid, inc, spec, truncation, keep)
    return SimulationResult(PathBundle(config.N, grid, out), int(clamps[0]))


def simulate(
    config: ModelConfig,
    grid: TimeGrid,
    noise: NoiseBundle,
    spec: IntegratorSpec | None = None,
) -> SimulationResult:
    """Tamed Euler run of the full triangle from config.initial.

    The step is T <- T + dW / sqrt(gamma) + clamp(drift, +-D) * dt with the
    whole state read at the start of the step (the interaction graph is
    one-directional, so this is the natural explicit scheme).
    """
    return _run_single(config, grid, noise, spec, None)


def simulate_truncated(
    config: ModelConfig,
    grid: TimeGrid,
    noise: NoiseBundle,
    truncation: TruncationLevels,
    spec: IntegratorSpec | None = None,
) -> SimulationResult:
    """Same stepper, but every T inside a drift exponent is replaced by its
    level cutoff clip(T, -L_n, L_n).  With inactive cutoffs the output is
    bit-identical to simulate under the same noise."""
    return _run_single(config, grid, noise, spec, truncation)


# ---------------------------------------------------------------------------
# closed forms for one particle over a lower barrier


def solve_edge_exact(
    lower: SamplePath, driver: np.ndarray, start: float, gamma: float
) -> SamplePath:
    """Exact solution of dT = dX + exp(gamma * (lower - T)) dt, T(a) = start.

    driver is the diffusion path X on the grid (pass W / sqrt(gamma) for the
    scaled system, or W itself for the unscaled edge equation).  The solution

        T(t) = start + X(t) - X(a)
               + (1/gamma) log{1 + gamma * integral_a^t
                                exp(gamma * (lower - X + X(a) - start)) ds}

    is evaluated with trapezoid quadrature accumulated in log space, so the
    exponent may reach hundreds of units without overflow.
    """
    grid = lower.grid
    x = np.asarray(driver, dtype=float)
    if x.shape != (grid.npoints,):
        raise ValueError("driver and lower barrier must share the grid")
    h = lower.values - x + x[0] - start
    log_integral = log_cumtrapz_exp(gamma * h, grid.dt) + np.log(gamma)
    lift = np.logaddexp(0.0, log_integral) / gamma
    return SamplePath(grid, start + x - x[0] + lift)


def simulate_tilde0(
    phi_minus: SamplePath, driver: np.ndarray, start: float, gamma: float
) -> SamplePath:
    """Single-particle approximation with only the lower barrier active.

    Identical formula to solve_edge_exact with the barrier a fixed function;
    kept as its own entry point because it is the object the equivalence
    experiments couple against."""
    return solve_edge_exact(phi_minus, driver, start, gamma)


def simulate_lower_barrier_euler(
    phi_minus: SamplePath,
    increments: np.ndarray,
    start: float,
    gamma: float,
    cap: float | None = None,
) -> np.ndarray:
    """Tamed Euler for dT = dW/sqrt(gamma) + exp(gamma(phi_minus - T)) dt.

    increments has shape (R, M) of raw Normal(0, dt) draws; returns paths of
    shape (R, M+1).
    """
    grid = phi_minus.grid
    R, M = increments.shape
    if M != grid.steps:
        raise ValueError("increments do not match the barrier grid")
    cap = default_drift_cap(gamma) if cap is None else cap
    dt = grid.dt
    sqg = np.sqrt(gamma)
    out = np.empty((R, M + 1))
    out[:, 0] = start
    b = phi_minus.values
    for i in range(M):
        ex = gamma * (b[i] - out[:, i])
        drift = np.clip(np.exp(np.minimum(ex, _EXP_MAX)), None, cap)
        out[:, i + 1] = out[:, i] + increments[:, i] / sqg + drift * dt
    return out


def simulate_two_barrier(
    phi_minus: SamplePath,
    phi_plus: SamplePath,
    increments: np.ndarray,
    start: float,
    gamma: float,
    cap: float | None = None,
) -> np.ndarray:
    """Tamed Euler for the single particle between two fixed barriers,

        dT = dW/sqrt(gamma) + (exp(gamma(phi_minus - T))
                               - exp(gamma(T - phi_plus))) dt.

    increments (R, M) of Normal(0, dt); returns paths (R, M+1).  With
    gamma = 1 this is also the bounded-coefficient particle used for the
    escape-probability experiments.
    """
    grid = phi_minus.grid
    if phi_plus.grid != grid:
        raise ValueError("barriers must share a grid")
    R, M = increments.shape
    if M != grid.steps:
        raise ValueError("increments do not match the barrier grid")
    cap = default_drift_cap(gamma) if cap is None else cap
    dt = grid.dt
    sqg = np.sqrt(gamma)
    out = np.empty((R, M + 1))
    out[:, 0] = start
    lo = phi_minus.values
    hi = phi_plus.values
    for i in range(M):
        t = out[:, i]
        up = np.exp(np.minimum(gamma * (lo[i] - t), _EXP_MAX))
        dn = np.exp(np.minimum(gamma * (t - hi[i]), _EXP_MAX))
        drift = np.clip(up - dn, -cap, cap)
        out[:, i + 1] = t + increments[:, i] / sqg + drift * dt
    return out


def four_particle_scan(
    gamma: float,
    grid: TimeGrid,
    increments: np.ndarray,
    cap: float | None = None,
    observe=None,
) -> np.ndarray:
    """Step the four-particle sub-system T0, T+, T-, T from zero starts.

    T0 is free, T+ is pushed up by T0, T- is pushed down by T0, and T sits
    between T- and T+.  increments has shape (R, 4, M) in that particle
    order; observe(i, vals) receives the (R, 4) state at every grid index.
    Returns per-replicate clamp counts.
    """
    R, P, M = increments.shape
    if P != 4 or M != grid.steps:
        raise ValueError("increments must have shape (R, 4, M)")
    cap = default_drift_cap(gamma) if cap is None else cap
    dt = grid.dt
    sqg = np.sqrt(gamma)
    vals = np.zeros((R, 4))
    clamps = np.zeros(R, dtype=int)
    if observe is not None:
        observe(0, vals)
    for i in range(M):
        t0, tp, tm, t = vals[:, 0], vals[:, 1], vals[:, 2], vals[:, 3]
        e = lambda x: np.exp(np.minimum(gamma * x, _EXP_MAX))  # noqa: E731
        drift = np.column_stack(
            [
                np.zeros(R),
                e(t0 - tp),
                -e(tm - t0),
                e(tm - t) - e(t - tp),
            ]
        )
        tamed = np.clip(drift, -cap, cap)
        clamps += np.count_nonzero(tamed != drift, axis=-1)
        vals = vals + increments[:, :, i] / sqg + tamed * dt
        if not np.all(np.isfinite(vals)):
            bad = np.argwhere(~np.isfinite(vals))[0]
            raise NonFiniteError(step=i + 1, particle=int(bad[-1]))
        if observe is not None:
            observe(i + 1, vals)
    return clamps


# ---------------------------------------------------------------------------
# pathwise comparisons and a-priori bounds


@dataclass(frozen=True)
class GapReport:
    gap: float
    budget: float
    within_budget: bool


def equivalence_gap(
    path_a: SamplePath, path_b: SamplePath, gamma: float, eta: float
) -> GapReport:
    """Sup-norm gap between two coupled paths against the pathwise budget
    exp(-gamma * eta / 2) * (b - a), valid while the particle keeps
    clearance eta below its upper barrier."""
    if path_a.grid != path_b.grid:
        raise ValueError("paths must share a grid")
    gap = float(np.max(np.abs(path_a.values - path_b.values)))
    budget = float(
        np.exp(-gamma * eta / 2.0) * (path_a.grid.b - path_a.grid.a)
    )
    return GapReport(gap=gap, budget=budget, within_budget=gap <= budget)


def escape_probability_bound(C0: float, C: float, L: float, T: float) -> float:
    """A-priori bound on P{sup_[0,T] X^2 >= L^2} for the bounded-barrier
    particle started at C0 with |barriers| <= C.

    Uses C1 = 1 + 2 exp(C - 1), the analytic supremum of 1 + 2 t e^{C-t},
    and G = C0^2 T + C1^2 T^2 / 2; the bound is G / (L^2 - C1 T - C0^2).
    """
    C1 = 1.0 + 2.0 * np.exp(C - 1.0)
    G = C0 * C0 * T + 0.5 * C1 * C1 * T * T
    denom = L * L - C1 * T - C0 * C0
    if denom <= 0:
        raise DomainError(
            f"bound vacuous: L^2 = {L * L} <= C1*T + C0^2 = {C1 * T + C0 * C0}"
        )
    return float(G / denom)
