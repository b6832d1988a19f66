"""Domain types for the triangular particle system.

The particle array is a triangle indexed by (n, k) with 1 <= k <= n <= N.
Particle (n, k) lives between two particles on the level above: (n-1, k-1)
bounds it from above and (n-1, k) bounds it from below,

    T[n, k] <= T[n-1, k-1]   (upper barrier, exists for k >= 2)
    T[n, k] >= T[n-1, k]     (lower barrier, exists for k <= n-1)

which is the interlacing order the dynamics preserve in the large-scaling
limit.  All containers here are immutable after construction and all
operations are pure, so everything is safe to share across workers.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "TriIndex",
    "TimeGrid",
    "SamplePath",
    "TriangularConfiguration",
    "PathBundle",
    "ModelConfig",
    "InterlaceBounds",
    "tri_indices",
    "tri_offset",
    "tri_size",
    "validate_initial",
    "interlacing_defect",
    "bundle_to_csv",
    "bundle_from_csv",
    "configuration_to_csv",
    "configuration_from_csv",
]


class TriIndex(NamedTuple):
    """Index (n, k) into the triangular array, 1 <= k <= n."""

    n: int
    k: int

    def validate(self, N: int) -> None:
        if not (1 <= self.k <= self.n <= N):
            raise ValueError(f"invalid triangular index {self} for N={N}")

    @property
    def upper_barrier(self) -> "TriIndex | None":
        """Index of the particle bounding this one from above, if any."""
        if self.k >= 2:
            return TriIndex(self.n - 1, self.k - 1)
        return None

    @property
    def lower_barrier(self) -> "TriIndex | None":
        """Index of the particle bounding this one from below, if any."""
        if self.k <= self.n - 1:
            return TriIndex(self.n - 1, self.k)
        return None


def tri_size(N: int) -> int:
    """Number of particles in a triangle of N levels."""
    return N * (N + 1) // 2


def tri_offset(n: int, k: int) -> int:
    """Position of (n, k) in level-major (row by row) flat order."""
    return n * (n - 1) // 2 + (k - 1)


def tri_indices(N: int) -> list[TriIndex]:
    """All indices in level-major order: (1,1), (2,1), (2,2), (3,1), ..."""
    return [TriIndex(n, k) for n in range(1, N + 1) for k in range(1, n + 1)]


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of M+1 points on [a, b] with 0 <= a < b <= 1."""

    a: float = 0.0
    b: float = 1.0
    steps: int = 1000

    def __post_init__(self):
        if not (0.0 <= self.a < self.b <= 1.0):
            raise ValueError(f"need 0 <= a < b <= 1, got [{self.a}, {self.b}]")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")

    @property
    def dt(self) -> float:
        return (self.b - self.a) / self.steps

    @property
    def times(self) -> np.ndarray:
        return self.a + self.dt * np.arange(self.steps + 1)

    @property
    def npoints(self) -> int:
        return self.steps + 1


@dataclass(frozen=True)
class SamplePath:
    """Values of a single particle (or barrier) on a TimeGrid."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (self.grid.npoints,):
            raise ValueError(
                f"values shape {v.shape} does not match grid with "
                f"{self.grid.npoints} points"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("sample path contains non-finite values")
        object.__setattr__(self, "values", v)

    @staticmethod
    def constant(grid: TimeGrid, value: float) -> "SamplePath":
        return SamplePath(grid, np.full(grid.npoints, float(value)))

    @staticmethod
    def from_function(grid: TimeGrid, f) -> "SamplePath":
        return SamplePath(grid, np.asarray([f(t) for t in grid.times], float))


@dataclass(frozen=True)
class TriangularConfiguration:
    """The particle array at a fixed time, flat in level-major order."""

    N: int
    entries: np.ndarray

    def __post_init__(self):
        e = _frozen(self.entries)
        if e.shape != (tri_size(self.N),):
            raise ValueError(
                f"expected {tri_size(self.N)} entries for N={self.N}, "
                f"got shape {e.shape}"
            )
        if not np.all(np.isfinite(e)):
            raise ValueError("configuration contains non-finite entries")
        object.__setattr__(self, "entries", e)

    def value(self, n: int, k: int) -> float:
        TriIndex(n, k).validate(self.N)
        return float(self.entries[tri_offset(n, k)])

    @staticmethod
    def zeros(N: int) -> "TriangularConfiguration":
        return TriangularConfiguration(N, np.zeros(tri_size(N)))

    @staticmethod
    def from_dict(N: int, values: dict) -> "TriangularConfiguration":
        entries = np.zeros(tri_size(N))
        for (n, k), v in values.items():
            entries[tri_offset(n, k)] = v
        return TriangularConfiguration(N, entries)


@dataclass(frozen=True)
class PathBundle:
    """One sample path per triangular index, all on the same grid.

    values has shape (P, M+1) with P = N(N+1)/2 in level-major order.
    """

    N: int
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (tri_size(self.N), self.grid.npoints):
            raise ValueError(
                f"expected values shape ({tri_size(self.N)}, "
                f"{self.grid.npoints}), got {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("path bundle contains non-finite values")
        object.__setattr__(self, "values", v)

    def path(self, n: int, k: int) -> SamplePath:
        TriIndex(n, k).validate(self.N)
        return SamplePath(self.grid, self.values[tri_offset(n, k)])

    def at_time(self, i: int) -> TriangularConfiguration:
        return TriangularConfiguration(self.N, self.values[:, i])

    @property
    def initial(self) -> TriangularConfiguration:
        return self.at_time(0)

    @staticmethod
    def constant(
        N: int, grid: TimeGrid, config: TriangularConfiguration
    ) -> "PathBundle":
        vals = np.repeat(config.entries[:, None], grid.npoints, axis=1)
        return PathBundle(N, grid, vals)

    @staticmethod
    def linear(
        N: int,
        grid: TimeGrid,
        start: TriangularConfiguration,
        end: TriangularConfiguration,
    ) -> "PathBundle":
        w = np.linspace(0.0, 1.0, grid.npoints)
        vals = start.entries[:, None] * (1 - w) + end.entries[:, None] * w
        return PathBundle(N, grid, vals)


@dataclass(frozen=True)
class ModelConfig:
    """Static description of one triangular system instance.

    gamma is the scaling parameter: noise enters as dW / sqrt(gamma) and the
    interaction exponents are multiplied by gamma.  drifts holds the constant
    per-level drift a_n (all zero for the scaling-limit experiments).
    drift_cap, when set, overrides the default taming cap exp(0.25 * gamma).
    """

    N: int
    gamma: float
    initial: TriangularConfiguration
    drifts: np.ndarray | None = None
    drift_cap: float | None = None

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.initial.N != self.N:
            raise ValueError("initial configuration N does not match config N")
        d = np.zeros(self.N) if self.drifts is None else _frozen(self.drifts)
        if d.shape != (self.N,):
            raise ValueError(f"drifts must have one entry per level ({self.N})")
        object.__setattr__(self, "drifts", d)
        if self.drift_cap is not None and self.drift_cap <= 0:
            raise ValueError("drift_cap must be positive")
        report = validate_initial_entries(self.N, self.initial.entries)
        if report:
            raise ValueError(f"initial configuration not interlaced: {report}")


@dataclass(frozen=True)
class InterlaceBounds:
    """Margins f_n, g_n for the almost-interlaced events, with g = 2 f.

    At level n the margins grow geometrically: g_n = 4**(n-1) * g.
    """

    f: float
    g: float = field(default=0.0)

    def __post_init__(self):
        g = self.g if self.g else 2.0 * self.f
        if self.f <= 0 or g <= 0:
            raise ValueError("margins must be positive")
        if abs(g - 2.0 * self.f) > 1e-12 * max(1.0, g):
            raise ValueError("need g = 2 f")
        object.__setattr__(self, "g", g)

    @staticmethod
    def from_gamma(gamma: float) -> "InterlaceBounds":
        f = 1.0 / np.sqrt(gamma)
        return InterlaceBounds(f=f, g=2.0 * f)

    def f_level(self, n: int) -> float:
        return 4 ** (n - 1) * self.f

    def g_level(self, n: int) -> float:
        return 4 ** (n - 1) * self.g


# ---------------------------------------------------------------------------
# interlacing checks


def _interlace_relations(N: int):
    """Pairs (hi, lo) of flat offsets with the constraint T[hi] >= T[lo].

    Covers every relation T[n-1,k-1] >= T[n,k] and T[n,k] >= T[n-1,k].
    """
    rels = []
    for n in range(2, N + 1):
        for k in range(1, n + 1):
            if k >= 2:
                rels.append(
                    (TriIndex(n - 1, k - 1), TriIndex(n, k))
                )  # upper barrier above particle
            if k <= n - 1:
                rels.append((TriIndex(n, k), TriIndex(n - 1, k)))
    return rels


def validate_initial_entries(N: int, entries: np.ndarray) -> list:
    """Violated relations as (upper_index, lower_index, signed_defect).

    The defect is T[hi] - T[lo]; negative means the relation is violated.
    Tolerance is exactly zero: the order constraints are non-strict.
    """
    violations = []
    for hi, lo in _interlace_relations(N):
        defect = entries[tri_offset(*hi)] - entries[tri_offset(*lo)]
        if defect < 0:
            violations.append((hi, lo, float(defect)))
    return violations


def validate_initial(config: ModelConfig) -> list:
    """Empty list if the initial configuration is interlaced, else the
    violation report.  ModelConfig already enforces this at construction;
    the function exists for checking candidate configurations."""
    return validate_initial_entries(config.N, config.initial.entries)


@dataclass(frozen=True)
class InterlaceReport:
    """Worst grid defects and event flags for a path bundle.

    defects maps each ordered relation (hi, lo) to min over the grid of
    T[hi] - T[lo].  Event flags follow the almost-interlaced events: A_n uses
    margin f_n on the level-adjacent relations, B_n uses margin g_n on the
    same relations, C_n uses margin g_n on same-level consecutive pairs
    T[n+1,k] - T[n+1,k+1].
    """

    defects: dict
    level_defects: dict
    same_level_defects: dict
    a_flags: dict
    b_flags: dict
    c_flags: dict

    @property
    def all_hold(self) -> bool:
        return all(self.a_flags.values()) and all(self.b_flags.values()) and all(
            self.c_flags.values()
        )


def interlacing_defect(
    bundle: PathBundle, margin: float | InterlaceBounds
) -> InterlaceReport:
    """Scan the whole grid for the worst defect of every order relation.

    margin may be a scalar (used for every relation at every level) or
    InterlaceBounds (level-dependent f_n / g_n margins).
    """
    N = bundle.N
    vals = bundle.values
    defects = {}
    for hi, lo in _interlace_relations(N):
        d = float(np.min(vals[tri_offset(*hi)] - vals[tri_offset(*lo)]))
        defects[(hi, lo)] = d

    # worst level-adjacent defect per level pair (n vs n+1)
    level_defects: dict[int, float] = {}
    for (hi, lo), d in defects.items():
        n = min(hi.n, lo.n)  # the upper level of the pair
        level_defects[n] = min(level_defects.get(n, np.inf), d)

    # same-level spacing defects: T[n+1,k] - T[n+1,k+1]
    same_level_defects: dict[int, float] = {}
    for n in range(1, N):
        worst = np.inf
        for k in range(1, n + 1):
            d = float(
                np.min(
                    vals[tri_offset(n + 1, k)] - vals[tri_offset(n + 1, k + 1)]
                )
            )
            worst = min(worst, d)
        same_level_defects[n] = worst

    if isinstance(margin, InterlaceBounds):
        f_of = margin.f_level
        g_of = margin.g_level
    else:
        f_of = g_of = lambda n: float(margin)  # noqa: E731

    a_flags = {n: level_defects[n] >= -f_of(n) for n in level_defects}
    b_flags = {n: level_defects[n] >= -g_of(n) for n in level_defects}
    c_flags = {n: same_level_defects[n] >= -g_of(n) for n in same_level_defects}
    return InterlaceReport(
        defects, level_defects, same_level_defects, a_flags, b_flags, c_flags
    )


# ---------------------------------------------------------------------------
# CSV schema: header `t,T_1_1,T_2_1,T_2_2,...` level-major, one row per grid
# point, full float precision so round trips are exact.


def _bundle_header(N: int) -> str:
    cols = ["t"] + [f"T_{n}_{k}" for n, k in tri_indices(N)]
    return ",".join(cols)


def bundle_to_csv(f, bundle: PathBundle, comments: list[str] | None = None) -> None:
    """Write a bundle to a text file object.  Comment lines start with '#'."""
    for line in comments or []:
        f.write(f"# {line}\n")
    f.write(_bundle_header(bundle.N) + "\n")
    t = bundle.grid.times
    for i in range(bundle.grid.npoints):
        row = [repr(float(t[i]))] + [
            repr(float(v)) for v in bundle.values[:, i]
        ]
        f.write(",".join(row) + "\n")


def bundle_from_csv(f) -> PathBundle:
    """Read a bundle written by bundle_to_csv.  Trailing comments allowed."""
    rows = []
    header = None
    for line in f:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            header = line.split(",")
            continue
        rows.append([float(x) for x in line.split(",")])
    if header is None or not rows:
        raise ValueError("empty bundle CSV")
    ncols = len(header)
    P = ncols - 1
    # invert P = N(N+1)/2
    N = int((np.sqrt(8 * P + 1) - 1) / 2)
    if tri_size(N) != P:
        raise ValueError(f"{P} particle columns is not a triangular count")
    expected = _bundle_header(N).split(",")
    if header != expected:
        raise ValueError(f"unexpected header {header}, want {expected}")
    data = np.asarray(rows)
    t = data[:, 0]
    dts = np.diff(t)
    if len(t) < 2 or not np.allclose(dts, dts[0], rtol=1e-9, atol=1e-12):
        raise ValueError("grid in CSV is not uniform")
    grid = TimeGrid(a=float(t[0]), b=float(t[-1]), steps=len(t) - 1)
    return PathBundle(N, grid, data[:, 1:].T)


def configuration_to_csv(f, config: TriangularConfiguration) -> None:
    cols = [f"T_{n}_{k}" for n, k in tri_indices(config.N)]
    f.write(",".join(cols) + "\n")
    f.write(",".join(repr(float(v)) for v in config.entries) + "\n")


def configuration_from_csv(f) -> TriangularConfiguration:
    lines = [
        ln.strip()
        for ln in f
        if ln.strip() and not ln.strip().startswith("#")
    ]
    if len(lines) < 2:
        raise ValueError("configuration CSV needs a header and one data row")
    P = len(lines[0].split(","))
    N = int((np.sqrt(8 * P + 1) - 1) / 2)
    if tri_size(N) != P:
        raise ValueError(f"{P} columns is not a triangular count")
    entries = np.asarray([float(x) for x in lines[1].split(",")])
    return TriangularConfiguration(N, entries)


def bundle_to_csv_string(bundle: PathBundle, comments=None) -> str:
    buf = io.StringIO()
    bundle_to_csv(buf, bundle, comments)
    return buf.getvalue()
