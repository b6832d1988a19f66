"""Small-ball probabilities and the large-deviation slope.

Estimates P(sup-norm distance to a target path <= delta) across a ladder
of gamma values and fits the decay rate of -log p against gamma.  Kept at
desk scale (10^4 replicates per gamma) so it runs in well under a minute.
"""

import numpy as np

from whittaker2d import (
    ModelConfig,
    PathBundle,
    TimeGrid,
    TriangularConfiguration,
    ldp_slope,
    smallball_probability,
)


def main():
    grid = TimeGrid(0.0, 1.0, 500)
    config = ModelConfig(
        N=1, gamma=32.0, initial=TriangularConfiguration.zeros(1)
    )
    target = PathBundle.linear(
        1,
        grid,
        TriangularConfiguration.zeros(1),
        TriangularConfiguration(1, np.array([0.4])),
    )

    delta = 0.15
    est = smallball_probability(config, target, delta, 10_000, seed=42)
    print(f"gamma=32: p_hat {est.p_hat:.4f} "
          f"[{est.ci_low:.4f}, {est.ci_high:.4f}] "
          f"({est.hits}/{est.n_samples} hits, trusted={est.trusted})")

    fit = ldp_slope(
        config, target, delta, [32.0, 64.0, 128.0, 256.0], 30_000, seed=42
    )
    print("\n gamma   p_hat      -log(p)/gamma")
    for gamma, res, s in zip(fit.gammas, fit.results, fit.per_gamma_slope):
        print(f"{gamma:6.0f}   {res.p_hat:8.5f}   {s:.4f}")
    print(f"\nfitted decay slope: {fit.slope:.4f}")
    print(f"action of the target path itself: {fit.predicted_rate:.4f}")
    # the ball decays at the action of its cheapest member, the straight
    # line of slope 0.4 - 0.15, not at the action of the center path
    cheapest = 0.5 * (0.4 - delta) ** 2
    print(f"action of the cheapest path in the ball: {cheapest:.4f}")


if __name__ == "__main__":
    main()
