"""Shared helpers for the test suite."""

import numpy as np

from deltascat import Direction, PTDoubleDeltaParams


def unit_vector(rng) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_direction(rng) -> Direction:
    return Direction.normalized(rng.normal(size=3))


def random_pt_params(rng, kr0_low=0.1, kr0_high=10.0) -> PTDoubleDeltaParams:
    """Random mirrored-pair parameters with k*r0 in the requested window and
    couplings bounded away from the degenerate point."""
    while True:
        k = rng.uniform(0.2, 4.0)
        r0_mag = rng.uniform(kr0_low, kr0_high) / k
        alpha = rng.uniform(0.2, 3.0) * rng.choice([-1.0, 1.0])
        sigma = rng.uniform(-2.0, 2.0)
        gamma = rng.uniform(-2.0, 2.0)
        if alpha * alpha * (sigma * sigma + gamma * gamma) > 1e-4:
            return PTDoubleDeltaParams(
                r0=unit_vector(rng) * r0_mag,
                alpha=alpha,
                sigma=sigma,
                gamma=gamma,
                k=k,
            )


def cramer_solve_2x2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Independent 2x2 solve by Cramer's rule (test oracle)."""
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    return np.array(
        [
            (b[0] * a[1, 1] - a[0, 1] * b[1]) / det,
            (a[0, 0] * b[1] - b[0] * a[1, 0]) / det,
        ]
    )
