"""Simulate the triangular particle array and inspect its geometry.

Runs a few replicates of the N-level system at moderate noise, prints the
terminal configuration, and verifies that the interlacing order
T_{n+1,k+1} <= T_{n,k} <= T_{n+1,k} survives the whole trajectory.
"""

import numpy as np

from whittaker2d import (
    IntegratorSpec,
    ModelConfig,
    Seed,
    TimeGrid,
    TriangularConfiguration,
    interlacing_defect,
    sample_noise,
    simulate,
)


def main():
    N = 4
    gamma = 32.0
    grid = TimeGrid(0.0, 1.0, 2000)
    config = ModelConfig(
        N=N, gamma=gamma, initial=TriangularConfiguration.zeros(N)
    )
    spec = IntegratorSpec()

    for replicate in range(3):
        noise = sample_noise(Seed(2024, replicate), grid, N)
        result = simulate(config, grid, noise, spec)
        bundle = result.bundle
        terminal = bundle.at_time(grid.steps)
        # at finite gamma the order is soft: dips up to about 1/sqrt(gamma)
        # below exact interlacing are ordinary fluctuation, not a failure
        margin = 1.0 / np.sqrt(gamma)
        report = interlacing_defect(bundle, margin)
        worst_gap = min(report.defects.values())
        print(f"replicate {replicate}:")
        print(f"  terminal entries: {np.round(terminal.entries, 4)}")
        print(f"  smallest interlacing gap along the path: {worst_gap:.4f}")
        print(f"  order held within margin 1/sqrt(gamma) = {margin:.3f}: "
              f"{report.all_hold}")
        print(f"  drift clamp events: {result.clamp_events}")

    # tighter noise pins the whole triangle near its start
    tight = ModelConfig(
        N=N, gamma=512.0, initial=TriangularConfiguration.zeros(N)
    )
    noise = sample_noise(Seed(2024, 0), grid, N)
    result = simulate(tight, grid, noise, spec)
    spread = np.max(np.abs(result.bundle.values))
    print(f"gamma=512 keeps the array within {spread:.4f} of the start")


if __name__ == "__main__":
    main()
