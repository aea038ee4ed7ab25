#!/usr/bin/env python3
"""
Compare exact confounding intervals with brute-force grid intervals.

- Draws 200 random bound boxes (rho_xy in (-0.95, 0.95), R^2 boxes within
  [0, 0.95]) with a fixed seed
- Checks that the 201- and 401-node grid intervals lie inside the exact one
- Checks that the endpoint gap shrinks from 201 to 401 nodes and ends up
  below an absolute 0.05
- Fails if the whole run takes longer than 5 minutes

The slope scales with sigma_y / sigma_x, and so does every grid gap. With
R^2 bounds up to 0.95, one rho step of the 401 grid can move the slope by
up to 19 * 0.005 * ratio, so ratios are drawn from [0.1, 0.5] to keep an
absolute 0.05 attainable.

Run manually before a release.
"""

import sys
import time

import numpy as np

from confounding_interval.oracle import GridConfig, grid_min_max, random_spec, random_stats
from confounding_interval.solver import solve_interval

CASES = 200
SEED = 20240601
RATIO_RANGE = (0.1, 0.5)
COARSE = GridConfig(201)
FINE = GridConfig(401)
MAX_GAP = 0.05
MAX_SECONDS = 300.0
CONTAINMENT_TOL = 1e-9


def gap(exact, grid):
    return max(grid.lower - exact.lower, exact.upper - grid.upper)


def run():
    rng = np.random.default_rng(SEED)
    failures = []
    worst = 0.0
    started = time.perf_counter()

    for case in range(CASES):
        stats = random_stats(rng, ratio_range=RATIO_RANGE)
        spec = random_spec(stats, rng)
        exact = solve_interval(stats, spec)
        coarse = grid_min_max(stats, spec, COARSE).interval
        fine = grid_min_max(stats, spec, FINE).interval

        tol = CONTAINMENT_TOL * max(1.0, abs(exact.lower), abs(exact.upper))
        for label, grid in (("201", coarse), ("401", fine)):
            if grid.lower < exact.lower - tol or grid.upper > exact.upper + tol:
                failures.append(f"case {case}: {label}-grid interval escapes the exact one")

        coarse_gap = gap(exact, coarse)
        fine_gap = gap(exact, fine)
        if fine_gap > coarse_gap + tol:
            failures.append(f"case {case}: gap grew from {coarse_gap:.3g} to {fine_gap:.3g}")
        if fine_gap > MAX_GAP:
            failures.append(f"case {case}: 401-grid gap {fine_gap:.3g} exceeds {MAX_GAP}")
        worst = max(worst, fine_gap)

        if (case + 1) % 20 == 0:
            print(f"  {case + 1}/{CASES} cases, worst 401-grid gap so far {worst:.3g}")

    elapsed = time.perf_counter() - started
    if elapsed > MAX_SECONDS:
        failures.append(f"run took {elapsed:.1f}s, over {MAX_SECONDS:.0f}s")

    print(f"\nChecked {CASES} cases in {elapsed:.1f}s")
    print(f"Worst 401-grid gap: {worst:.3g}")
    for failure in failures:
        print(f"  FAILED {failure}")
    if not failures:
        print("All cases passed")
    return len(failures)


if __name__ == "__main__":
    failed = run()
    sys.exit(1 if failed else 0)
